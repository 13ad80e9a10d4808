use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ComponentTable;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, lstsq};
use crate::stats::{t_quantile, t_upper_tail};

/// Column-normalised condition number above which a term is dropped.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeMode {
    Homoskedastic,
    #[default]
    Hc1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub beta: f64,
    pub se: f64,
    pub t_stat: f64,
    /// One-sided `P(T > t)` for `H0: beta <= 0`.
    pub p_null: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyRegressionFit {
    pub terms: Vec<String>,
    /// `None` for terms dropped as collinear.
    pub estimates: Vec<Option<Estimate>>,
    pub dof: usize,
    pub se_mode: SeMode,
    pub alpha: f64,
    pub fold: Option<usize>,
    /// Condition number of the column-normalised design actually fitted.
    pub condition: f64,
    /// The response `y - phi0` was identically zero.
    pub degenerate: bool,
}

/// Columns this small relative to the largest are treated as exactly zero.
const ZERO_COLUMN: f64 = 1e-10;

fn normalised_condition(x: &DMatrix<f64>, cols: &[usize], scale: f64) -> f64 {
    let mut sub = x.select_columns(cols);
    for mut c in sub.column_iter_mut() {
        let norm = c.norm();
        if norm <= ZERO_COLUMN * scale || norm == 0.0 {
            return f64::INFINITY;
        }
        c /= norm;
    }
    condition_number(&sub)
}

/// Least squares of `y - phi0` on the component columns, without intercept.
pub fn shapley_regression(
    table: &ComponentTable,
    y: &[f64],
    se_mode: SeMode,
    alpha: f64,
) -> Result<ShapleyRegressionFit> {
    let (p, q) = (table.n_rows(), table.n_terms());
    if y.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: y.len(),
        });
    }
    if p < q + 2 {
        return Err(Error::invalid(format!("{p} rows is too few for {q} terms")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must be in (0, 1)"));
    }
    let x = DMatrix::from_row_slice(p, q, table.values.as_slice());
    let z = DVector::from_iterator(p, y.iter().map(|v| v - table.phi0));

    let scale = x.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let all: Vec<usize> = (0..q).collect();
    let mut kept = all.clone();
    if !(normalised_condition(&x, &all, scale) <= MAX_CONDITION) {
        kept.clear();
        for j in 0..q {
            kept.push(j);
            if !(normalised_condition(&x, &kept, scale) <= MAX_CONDITION) {
                kept.pop();
            }
        }
    }
    let dof = p - kept.len();
    let mut estimates = vec![None; q];
    let degenerate = z.iter().all(|v| *v == 0.0);
    if kept.is_empty() {
        return Ok(ShapleyRegressionFit {
            terms: table.labels.clone(),
            estimates,
            dof,
            se_mode,
            alpha,
            fold: None,
            condition: f64::INFINITY,
            degenerate,
        });
    }
    let condition = normalised_condition(&x, &kept, scale);
    let xk = x.select_columns(&kept);
    let fit = lstsq(&xk, &z, f64::INFINITY)?;
    let resid = &z - &xk * &fit.beta;
    let cov = match se_mode {
        SeMode::Homoskedastic => &fit.xtx_inv * (resid.norm_squared() / dof as f64),
        SeMode::Hc1 => {
            let mut meat = DMatrix::zeros(kept.len(), kept.len());
            for i in 0..p {
                let row = xk.row(i);
                meat += row.transpose() * row * (resid[i] * resid[i]);
            }
            &fit.xtx_inv * meat * &fit.xtx_inv * (p as f64 / dof as f64)
        }
    };
    let crit = t_quantile(1.0 - alpha / 2.0, dof as f64);
    for (a, &j) in kept.iter().enumerate() {
        let (beta, se) = if degenerate {
            (0.0, 0.0)
        } else {
            (fit.beta[a], cov[(a, a)].max(0.0).sqrt())
        };
        let t_stat = if se > 0.0 {
            beta / se
        } else if beta == 0.0 {
            0.0
        } else {
            beta.signum() * f64::INFINITY
        };
        estimates[j] = Some(Estimate {
            beta,
            se,
            t_stat,
            p_null: t_upper_tail(t_stat, dof as f64),
            ci_low: beta - crit * se,
            ci_high: beta + crit * se,
        });
    }
    Ok(ShapleyRegressionFit {
        terms: table.labels.clone(),
        estimates,
        dof,
        se_mode,
        alpha,
        fold: None,
        condition,
        degenerate,
    })
}

/// Significance stars for a one-sided p-value.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// Per-term `(p_null, stars)`; `None` for dropped terms.
pub fn test_null(fit: &ShapleyRegressionFit) -> Vec<Option<(f64, &'static str)>> {
    fit.estimates
        .iter()
        .map(|e| e.map(|e| (e.p_null, stars(e.p_null))))
        .collect()
}

/// The interval excludes zero and includes one.
pub fn is_robust(ci_low: f64, ci_high: f64) -> bool {
    (ci_low > 0.0 || ci_high < 0.0) && ci_low <= 1.0 && 1.0 <= ci_high
}

/// Robust flags with intervals recomputed at level `alpha`.
pub fn test_robust(fit: &ShapleyRegressionFit, alpha: f64) -> Vec<bool> {
    let crit = t_quantile(1.0 - alpha / 2.0, fit.dof as f64);
    fit.estimates
        .iter()
        .map(|e| match e {
            Some(e) => is_robust(e.beta - crit * e.se, e.beta + crit * e.se),
            None => false,
        })
        .collect()
}
