use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::lstsq;

/// Designs worse conditioned than this are reported as rank deficient.
const MAX_CONDITION: f64 = 1e12;

/// Least-squares polynomial of `values` on `covariate` over treated rows.
///
/// Coefficients are in ascending degree.
pub fn interaction_curve(values: &[f64], covariate: &[f64], treated: &[bool], degree: usize) -> Result<Vec<f64>> {
    let n = values.len();
    for len in [covariate.len(), treated.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let rows: Vec<usize> = (0..n).filter(|&i| treated[i]).collect();
    if rows.len() < degree + 2 {
        return Err(Error::invalid(format!(
            "{} treated rows cannot determine a degree-{degree} curve",
            rows.len()
        )));
    }
    let x = DMatrix::from_fn(rows.len(), degree + 1, |r, d| covariate[rows[r]].powi(d as i32));
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| values[i]));
    Ok(lstsq(&x, &y, MAX_CONDITION)?.beta.iter().copied().collect())
}

/// Evaluates ascending-degree coefficients at `x`.
pub fn polyval(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
}
