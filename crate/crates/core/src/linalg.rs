//! Least squares via SVD, shared by the OLS learner and the surrogate regression.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) struct LeastSquares {
    pub beta: DVector<f64>,
    /// `(X'X)^{-1}`.
    pub xtx_inv: DMatrix<f64>,
}

/// Ratio of extreme singular values; infinite for a zero singular value.
pub(crate) fn condition_number(x: &DMatrix<f64>) -> f64 {
    let sv = x.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `min ||y - X b||` and refuses designs with condition number above `max_condition`.
pub(crate) fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>, max_condition: f64) -> Result<LeastSquares> {
    if x.nrows() < x.ncols() {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
        });
    }
    let svd = x.clone().svd(true, true);
    let sv = &svd.singular_values;
    let max = sv.max();
    let min = sv.min();
    let condition = if min <= 0.0 { f64::INFINITY } else { max / min };
    if !(condition <= max_condition) {
        return Err(Error::RankDeficient { condition });
    }
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V'");
    let uty = u.transpose() * y;
    let scaled = DVector::from_iterator(sv.len(), uty.iter().zip(sv.iter()).map(|(a, s)| a / s));
    let beta = v_t.transpose() * scaled;
    let inv_sq = DMatrix::from_diagonal(&sv.map(|s| 1.0 / (s * s)));
    let xtx_inv = v_t.transpose() * inv_sq * v_t;
    Ok(LeastSquares { beta, xtx_inv })
}
