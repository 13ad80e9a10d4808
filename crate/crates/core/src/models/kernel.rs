//! RBF kernel ridge regression with a mean intercept.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::{check_width, Learner, TrainedModel};
use crate::data::{BackgroundSet, Dataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelParams {
    /// RBF width: `k(a, b) = exp(-gamma * |a - b|^2)`.
    pub gamma: f64,
    /// Ridge penalty added to the kernel diagonal.
    pub lambda: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            gamma: 0.2,
            lambda: 0.05,
        }
    }
}

/// Dual solution `alpha = (K + lambda I)^{-1} (y - mean(y))`; predictions add the mean back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub gamma: f64,
    pub intercept: f64,
    pub alpha: Vec<f64>,
    pub support: Matrix,
}

#[inline]
fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d).exp()
}

pub fn fit_kernel(ds: &Dataset, params: &KernelParams) -> Result<TrainedModel> {
    if !(params.gamma > 0.0 && params.gamma.is_finite()) {
        return Err(Error::invalid("kernel gamma must be positive"));
    }
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(Error::invalid("kernel lambda must be positive"));
    }
    let x = ds.features();
    let m = x.nrows();
    let intercept = ds.target().iter().sum::<f64>() / m as f64;
    let gram = Mat::<f64>::from_fn(m, m, |i, j| {
        rbf(params.gamma, x.row(i), x.row(j)) + if i == j { params.lambda } else { 0.0 }
    });
    let rhs = Mat::<f64>::from_fn(m, 1, |i, _| ds.target()[i] - intercept);
    let llt = gram
        .llt(Side::Lower)
        .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
    let sol = llt.solve(&rhs);
    let alpha: Vec<f64> = (0..m).map(|i| sol[(i, 0)]).collect();
    if alpha.iter().any(|a| !a.is_finite()) {
        return Err(Error::LinearSolve("non-finite dual coefficients".into()));
    }
    let model = KernelModel {
        gamma: params.gamma,
        intercept,
        alpha,
        support: x.clone(),
    };
    TrainedModel::new(Learner::Kernel(model), ds, None)
}

impl KernelModel {
    pub(crate) fn predict_unchecked(&self, rows: &Matrix) -> Vec<f64> {
        rows.rows()
            .map(|r| {
                self.intercept
                    + self
                        .support
                        .rows()
                        .zip(&self.alpha)
                        .map(|(s, a)| a * rbf(self.gamma, r, s))
                        .sum::<f64>()
            })
            .collect()
    }

    /// Exact background averages of hybrid-row predictions.
    ///
    /// The RBF kernel factorises over coordinates, so for coalition `S`
    /// `E_b k(hybrid, s_j) = prod_{k in S} e_k(row, s_j) * E_b prod_{k not in S} e_k(b, s_j)`
    /// with `e_k(a, s) = exp(-gamma (a_k - s_k)^2)`. The background factor depends
    /// only on the coalition and support point, so it is computed once.
    pub fn coalition_values(&self, rows: &Matrix, background: &BackgroundSet, keep: &[Vec<bool>]) -> Result<Matrix> {
        let n = self.support.ncols();
        check_width(n, rows)?;
        check_width(n, background.rows())?;
        if let Some(bad) = keep.iter().find(|k| k.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        let s_count = self.support.nrows();
        let mut factors = vec![0.0; n];

        // bg_factor[c][j] = alpha_j * sum_b w_b prod_{k not kept} e_k(b, s_j)
        let mut bg_factor = vec![vec![0.0; s_count]; keep.len()];
        for (b, w) in background.rows().rows().zip(background.weights()) {
            for (j, s) in self.support.rows().enumerate() {
                for k in 0..n {
                    let d = b[k] - s[k];
                    factors[k] = (-self.gamma * d * d).exp();
                }
                for (c, mask) in keep.iter().enumerate() {
                    let mut prod = *w;
                    for k in 0..n {
                        if !mask[k] {
                            prod *= factors[k];
                        }
                    }
                    bg_factor[c][j] += prod;
                }
            }
        }
        for col in bg_factor.iter_mut() {
            for (v, a) in col.iter_mut().zip(&self.alpha) {
                *v *= a;
            }
        }

        let mut out = Matrix::zeros(rows.nrows(), keep.len());
        let mut acc = vec![0.0; keep.len()];
        for (i, r) in rows.rows().enumerate() {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for (j, s) in self.support.rows().enumerate() {
                for k in 0..n {
                    let d = r[k] - s[k];
                    factors[k] = (-self.gamma * d * d).exp();
                }
                for (c, mask) in keep.iter().enumerate() {
                    let mut prod = bg_factor[c][j];
                    for k in 0..n {
                        if mask[k] {
                            prod *= factors[k];
                        }
                    }
                    acc[c] += prod;
                }
            }
            for (c, a) in acc.iter().enumerate() {
                out.set(i, c, self.intercept + a);
            }
        }
        Ok(out)
    }
}
