use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Learner, TrainedModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::matrix::Matrix;

/// Ordinary least squares with intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub(crate) fn predict_unchecked(&self, rows: &Matrix) -> Vec<f64> {
        rows.rows()
            .map(|r| self.intercept + r.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum::<f64>())
            .collect()
    }
}

/// Largest condition number of `[1 | X]` accepted as full rank.
const MAX_CONDITION: f64 = 1e10;

pub fn fit_linear(ds: &Dataset) -> Result<TrainedModel> {
    let model = ols(ds.features(), ds.target())?;
    TrainedModel::new(Learner::Linear(model), ds, None)
}

pub(crate) fn ols(x: &Matrix, y: &[f64]) -> Result<LinearModel> {
    let (m, n) = (x.nrows(), x.ncols());
    if m <= n + 1 {
        return Err(Error::invalid(format!("OLS needs more than {} rows, got {m}", n + 1)));
    }
    let design = DMatrix::from_fn(m, n + 1, |i, j| if j == 0 { 1.0 } else { x.get(i, j - 1) });
    let fit = lstsq(&design, &DVector::from_column_slice(y), MAX_CONDITION)?;
    Ok(LinearModel {
        intercept: fit.beta[0],
        coefficients: fit.beta.iter().skip(1).copied().collect(),
    })
}
