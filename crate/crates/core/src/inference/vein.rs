use serde::{Deserialize, Serialize};

use super::{Estimate, ShapleyRegressionFit};
use crate::error::{Error, Result};
use crate::stats::{median, next_distinct_above_median, t_quantile};

/// Fold count `ceil(m^(1 - 2 xi)) + 1`, or 2 once `xi >= 1/2`.
///
/// A power within 1e-9 (relative) of an integer is snapped to it, so exact
/// cases such as `10000^0.5` are not pushed up by rounding error.
pub fn required_folds(m: usize, xi: f64) -> usize {
    if xi >= 0.5 {
        return 2;
    }
    let power = (m as f64).powf(1.0 - 2.0 * xi);
    let nearest = power.round();
    let ceil = if (power - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        power.ceil()
    };
    ceil as usize + 1
}

/// `r = sqrt(df0/df_adj) * t(1 - alpha_v/2, df_adj) / t(1 - alpha_v/2, df0)`
/// with `df_adj = m^(2 xi) - terms`; 1 when `df_adj <= 0`, and never below 1.
pub fn ci_ratio(df0: usize, m: usize, xi: f64, terms: usize, alpha_v: f64) -> f64 {
    let df_adj = (m as f64).powf(2.0 * xi) - terms as f64;
    let df0 = df0 as f64;
    if df_adj <= 0.0 || df0 <= 0.0 {
        return 1.0;
    }
    let q = 1.0 - alpha_v / 2.0;
    let r = (df0 / df_adj).sqrt() * t_quantile(q, df_adj) / t_quantile(q, df0);
    r.max(1.0)
}

/// Widens every interval about its estimate by [`ci_ratio`]; returns the ratio used.
pub fn adjust_ci(fit: &ShapleyRegressionFit, m: usize, xi: f64, alpha_v: f64) -> (ShapleyRegressionFit, f64) {
    let r = ci_ratio(fit.dof, m, xi, fit.terms.len(), alpha_v);
    let mut out = fit.clone();
    for e in out.estimates.iter_mut().flatten() {
        let half_low = e.beta - e.ci_low;
        let half_high = e.ci_high - e.beta;
        e.ci_low = e.beta - r * half_low;
        e.ci_high = e.beta + r * half_high;
    }
    (out, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VeinEstimate {
    pub beta: f64,
    pub se: f64,
    /// `min(1, 2 * median p)`.
    pub p_null: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Folds in which the term was estimable.
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VeinSummary {
    pub terms: Vec<String>,
    pub estimates: Vec<Option<VeinEstimate>>,
    pub alpha: f64,
    pub alpha_v: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

/// Cross-fold medians: point = median beta, interval = [median of lower bounds,
/// next distinct value above the median of upper bounds], level `2 alpha`.
pub fn vein_aggregate(fits: &[ShapleyRegressionFit], alpha: f64) -> Result<VeinSummary> {
    if fits.len() < 2 {
        return Err(Error::invalid("VEIN needs at least two folds"));
    }
    let terms = fits[0].terms.clone();
    if fits.iter().any(|f| f.terms != terms) {
        return Err(Error::Incompatible("folds disagree on the term set".into()));
    }
    let estimates = (0..terms.len())
        .map(|j| {
            let per: Vec<Estimate> = fits.iter().filter_map(|f| f.estimates[j]).collect();
            if per.is_empty() {
                return None;
            }
            let pick = |f: fn(&Estimate) -> f64| per.iter().map(f).collect::<Vec<f64>>();
            Some(VeinEstimate {
                beta: median(&pick(|e| e.beta)),
                se: median(&pick(|e| e.se)),
                p_null: (2.0 * median(&pick(|e| e.p_null))).min(1.0),
                ci_low: median(&pick(|e| e.ci_low)),
                ci_high: next_distinct_above_median(&pick(|e| e.ci_high)),
                folds: per.len(),
            })
        })
        .collect();
    Ok(VeinSummary {
        terms,
        estimates,
        alpha,
        alpha_v: 2.0 * alpha,
        k: fits.len(),
    })
}
