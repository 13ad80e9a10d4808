use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{is_robust, stars, ComponentTable, VeinSummary};
use crate::data::fmt_num;
use crate::error::{Error, Result};
use crate::models::LinearModel;
use crate::shapley::{Coalition, Player, Universe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "n.a.")]
    NotApplicable,
}

impl Sign {
    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
            Sign::NotApplicable => "n.a.",
        }
    }

    fn factor(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            _ => 1.0,
        }
    }
}

/// Signs of the OLS coefficients for single-feature terms; `n.a.` otherwise.
pub fn term_signs(universe: &Universe, terms: &[Coalition], linear: &LinearModel) -> Vec<Sign> {
    terms
        .iter()
        .map(|c| match c.members()[..] {
            [p] => match universe.players()[p] {
                Player::Feature(f) if linear.coefficients[f] < 0.0 => Sign::Negative,
                Player::Feature(_) => Sign::Positive,
                Player::Others(_) => Sign::NotApplicable,
            },
            _ => Sign::NotApplicable,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareSummary {
    /// Signed shares `sign * mean(|phi_k| / sum_l |phi_l|)`.
    pub shares: Vec<f64>,
    /// Rows that entered the mean.
    pub rows_used: usize,
    /// Rows skipped because every attribution was zero.
    pub excluded: usize,
}

fn check_region(table: &ComponentTable, signs: &[Sign], region: &[usize]) -> Result<()> {
    if region.is_empty() {
        return Err(Error::Empty("evaluation region".into()));
    }
    if signs.len() != table.n_terms() {
        return Err(Error::DimensionMismatch {
            expected: table.n_terms(),
            actual: signs.len(),
        });
    }
    if let Some(&bad) = region.iter().find(|&&i| i >= table.n_rows()) {
        return Err(Error::invalid(format!("region row {bad} out of range")));
    }
    Ok(())
}

/// Shapley share coefficients over the rows in `region`.
pub fn ssc(table: &ComponentTable, signs: &[Sign], region: &[usize]) -> Result<ShareSummary> {
    check_region(table, signs, region)?;
    let q = table.n_terms();
    let mut acc = vec![0.0; q];
    let mut used = 0usize;
    for &i in region {
        let row = table.values.row(i);
        let total: f64 = row.iter().map(|v| v.abs()).sum();
        if total == 0.0 {
            continue;
        }
        used += 1;
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v.abs() / total;
        }
    }
    let excluded = region.len() - used;
    if excluded > 0 {
        log::warn!("{excluded} rows with all-zero attributions excluded from shares");
    }
    if used == 0 {
        return Err(Error::invalid("every row in the region has zero attributions"));
    }
    Ok(ShareSummary {
        shares: acc
            .iter()
            .zip(signs)
            .map(|(a, s)| s.factor() * a / used as f64)
            .collect(),
        rows_used: used,
        excluded,
    })
}

/// Shapley mean coefficients `sign * mean(phi_k)` over `region`.
pub fn smc(table: &ComponentTable, signs: &[Sign], region: &[usize]) -> Result<Vec<f64>> {
    check_region(table, signs, region)?;
    let n = region.len() as f64;
    Ok((0..table.n_terms())
        .map(|j| signs[j].factor() * region.iter().map(|&i| table.values.get(i, j)).sum::<f64>() / n)
        .collect())
}

/// `min(sqrt(s (1 - s) / n), 1 / sqrt(2 n))`.
pub fn ssc_se_bound(share: f64, region_size: usize) -> f64 {
    let n = region_size as f64;
    (share * (1.0 - share) / n).max(0.0).sqrt().min(1.0 / (2.0 * n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub term: String,
    pub beta_s: Option<f64>,
    pub se: Option<f64>,
    pub p_h0: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub sign: Sign,
    /// `|Gamma|`, the unsigned share.
    pub share: f64,
    pub mean: f64,
    pub se_bound: f64,
    pub alpha_level: String,
    pub robust: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub rows: Vec<CoefficientRow>,
    pub alpha_v: f64,
}

impl CoefficientTable {
    /// Combines VEIN estimates with shares and means over a region of `region_size` rows.
    pub fn build(
        vein: &VeinSummary,
        signs: &[Sign],
        shares: &[f64],
        means: &[f64],
        region_size: usize,
    ) -> Result<Self> {
        let q = vein.terms.len();
        for len in [signs.len(), shares.len(), means.len()] {
            if len != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    actual: len,
                });
            }
        }
        let rows = (0..q)
            .map(|j| {
                let e = vein.estimates[j];
                let share = shares[j].abs();
                CoefficientRow {
                    term: vein.terms[j].clone(),
                    beta_s: e.map(|e| e.beta),
                    se: e.map(|e| e.se),
                    p_h0: e.map(|e| e.p_null),
                    ci_low: e.map(|e| e.ci_low),
                    ci_high: e.map(|e| e.ci_high),
                    sign: signs[j],
                    share,
                    mean: means[j],
                    se_bound: ssc_se_bound(share, region_size),
                    alpha_level: e.map_or("", |e| stars(e.p_null)).to_string(),
                    robust: e.is_some_and(|e| is_robust(e.ci_low, e.ci_high)),
                }
            })
            .collect();
        Ok(CoefficientTable {
            rows,
            alpha_v: vein.alpha_v,
        })
    }

    pub fn row(&self, term: &str) -> Option<&CoefficientRow> {
        self.rows.iter().find(|r| r.term == term)
    }

    /// CSV with columns `term, beta_S, se, p_H0, ci_low, ci_high, sign, share, mean, alpha_level, robust`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "term",
            "beta_S",
            "se",
            "p_H0",
            "ci_low",
            "ci_high",
            "sign",
            "share",
            "mean",
            "alpha_level",
            "robust",
        ])?;
        let num = |v: Option<f64>| v.map_or(String::new(), fmt_num);
        for r in &self.rows {
            w.write_record([
                r.term.clone(),
                r.beta_s.map_or("undefined".into(), fmt_num),
                num(r.se),
                num(r.p_h0),
                num(r.ci_low),
                num(r.ci_high),
                r.sign.as_str().into(),
                fmt_num(r.share),
                fmt_num(r.mean),
                r.alpha_level.clone(),
                if r.robust { "x".into() } else { String::new() },
            ])?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
