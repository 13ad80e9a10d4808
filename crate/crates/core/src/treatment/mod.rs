//! Treatment-function decomposition for randomised experiments.
//!
//! With an untreated background, the treatment is a null player for untreated
//! rows, so its main and interaction terms measure the effect of treatment.

mod curve;
mod simulation;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use curve::{interaction_curve, polyval};
pub use simulation::{simulate_dgp, DgpSource, DgpSurface, SimConfig, SIM_COLUMNS};

use crate::data::{fmt_num, BackgroundSet};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::models::Predict;
use crate::shapley::{group_others, Coalition, ShapleyDecomposition, Universe, ValueTable};

/// `prediction = phi00 + bare_t + sum_k interactions[k] + phi_z` for every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentFunction {
    pub phi00: f64,
    pub universe: Universe,
    /// Player holding the treatment.
    pub t_player: usize,
    /// The other players, in universe order.
    pub covariates: Vec<usize>,
    /// `phi_t - sum_k phi_kt`.
    pub bare_t: Vec<f64>,
    /// `2 phi_kt`, one column per covariate.
    pub interactions: Matrix,
    /// `sum_k (phi_k - phi_kt)`.
    pub phi_z: Vec<f64>,
    pub treated: Vec<bool>,
    pub predictions: Vec<f64>,
    pub row_ids: Vec<usize>,
}

fn check_compatible(h1: &ShapleyDecomposition, h2: &ShapleyDecomposition) -> Result<()> {
    let fail = |what: &str| Err(Error::Incompatible(what.into()));
    if h1.order() != 1 || h2.order() != 2 {
        return fail("expected an order-1 and an order-2 decomposition");
    }
    if h1.universe() != h2.universe() {
        return fail("different player universes");
    }
    if h1.model_id() != h2.model_id() {
        return fail("different models");
    }
    if h1.background_id() != h2.background_id() {
        return fail("different backgrounds");
    }
    if h1.row_ids() != h2.row_ids() {
        return fail("different rows");
    }
    if h1.phi0() != h2.phi0() {
        return fail("different base values");
    }
    Ok(())
}

/// Regroups order-1 and order-2 terms into the treatment function.
///
/// `t_index` is the treatment's feature column; it must be a singleton player.
pub fn treatment_decompose(
    h1: &ShapleyDecomposition,
    h2: &ShapleyDecomposition,
    t_index: usize,
    treated: &[bool],
) -> Result<TreatmentFunction> {
    check_compatible(h1, h2)?;
    let universe = h1.universe().clone();
    let t = universe
        .player_of(t_index)
        .ok_or_else(|| Error::invalid(format!("feature {t_index} is not a singleton player")))?;
    let p = h1.n_rows();
    if treated.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: treated.len(),
        });
    }
    let covariates: Vec<usize> = (0..universe.len()).filter(|&k| k != t).collect();
    let index = |d: &ShapleyDecomposition, players: &[usize]| {
        d.term_index(Coalition::from_players(players))
            .ok_or_else(|| Error::Incompatible("missing term".into()))
    };
    let main_t = index(h1, &[t])?;
    let mains: Vec<usize> = covariates.iter().map(|&k| index(h1, &[k])).collect::<Result<_>>()?;
    let pairs: Vec<usize> = covariates
        .iter()
        .map(|&k| index(h2, &[t.min(k), t.max(k)]))
        .collect::<Result<_>>()?;

    let (v1, v2) = (h1.values(), h2.values());
    let mut bare_t = Vec::with_capacity(p);
    let mut phi_z = Vec::with_capacity(p);
    let mut inter = Vec::with_capacity(p * covariates.len());
    for i in 0..p {
        let mut pair_sum = 0.0;
        let mut z = 0.0;
        for (&m, &q) in mains.iter().zip(&pairs) {
            let kt = v2.get(i, q);
            pair_sum += kt;
            z += v1.get(i, m) - kt;
            inter.push(2.0 * kt);
        }
        bare_t.push(v1.get(i, main_t) - pair_sum);
        phi_z.push(z);
    }
    Ok(TreatmentFunction {
        phi00: h1.phi0(),
        universe,
        t_player: t,
        interactions: Matrix::from_row_major(p, covariates.len(), inter)?,
        covariates,
        bare_t,
        phi_z,
        treated: treated.to_vec(),
        predictions: h1.predictions().to_vec(),
        row_ids: h1.row_ids().to_vec(),
    })
}

impl TreatmentFunction {
    pub fn n_rows(&self) -> usize {
        self.bare_t.len()
    }

    /// Pair label of each interaction column, e.g. `t:x1`.
    pub fn interaction_labels(&self, names: &[String]) -> Vec<String> {
        self.covariates
            .iter()
            .map(|&k| {
                let c = Coalition::from_players(&[self.t_player.min(k), self.t_player.max(k)]);
                self.universe.named_label(c, names)
            })
            .collect()
    }

    /// Interaction column for the covariate in feature column `feature`.
    pub fn interaction(&self, feature: usize) -> Option<Vec<f64>> {
        let player = self.universe.player_of(feature)?;
        let col = self.covariates.iter().position(|&k| k == player)?;
        Some(self.interactions.column(col))
    }

    /// Treatment part `bare_t + sum_k interactions` of each row.
    pub fn effect(&self, i: usize) -> f64 {
        self.bare_t[i] + self.interactions.row(i).iter().sum::<f64>()
    }

    /// Largest per-row difference between the regrouped sum and the prediction.
    pub fn reconstruction_gap(&self) -> f64 {
        (0..self.n_rows())
            .map(|i| (self.phi00 + self.effect(i) + self.phi_z[i] - self.predictions[i]).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `row_id, treated, phi00, bare_t, <interactions>, phi_z`.
    pub fn write_csv(&self, path: &Path, names: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["row_id".to_string(), "treated".into(), "phi00".into(), "bare_t".into()];
        header.extend(self.interaction_labels(names));
        header.push("phi_z".into());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec = vec![
                self.row_ids[i].to_string(),
                (self.treated[i] as u8).to_string(),
                fmt_num(self.phi00),
                fmt_num(self.bare_t[i]),
            ];
            rec.extend(self.interactions.row(i).iter().map(|&v| fmt_num(v)));
            rec.push(fmt_num(self.phi_z[i]));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Mean treatment effect `bare_t + sum_k interactions` over treated rows.
pub fn ate(tf: &TreatmentFunction) -> Result<f64> {
    let rows: Vec<usize> = (0..tf.n_rows()).filter(|&i| tf.treated[i]).collect();
    if rows.is_empty() {
        return Err(Error::NoTreated);
    }
    Ok(rows.iter().map(|&i| tf.effect(i)).sum::<f64>() / rows.len() as f64)
}

/// Mean `phi_z` over treated rows minus untreated rows.
///
/// Near zero when covariates are balanced; reported, never subtracted from the ATE.
pub fn confounding_gap(tf: &TreatmentFunction) -> Result<f64> {
    let mean = |flag: bool| {
        let v: Vec<f64> = (0..tf.n_rows())
            .filter(|&i| tf.treated[i] == flag)
            .map(|i| tf.phi_z[i])
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let treated = mean(true).ok_or(Error::NoTreated)?;
    let untreated = mean(false).ok_or(Error::NoUntreated)?;
    Ok(treated - untreated)
}

/// Both decompositions behind a treatment function.
#[derive(Debug, Clone)]
pub struct TreatmentAnalysis {
    pub h1: ShapleyDecomposition,
    pub h2: ShapleyDecomposition,
    pub tf: TreatmentFunction,
}

/// Decomposes `rows` over the players `keep` plus the treatment, with the rest grouped.
pub fn treatment_analysis(
    model: &dyn Predict,
    rows: &Matrix,
    background: &BackgroundSet,
    keep: &[usize],
    t_index: usize,
) -> Result<TreatmentAnalysis> {
    let mut players: Vec<usize> = keep.iter().copied().filter(|&k| k != t_index).collect();
    players.push(t_index);
    let universe = group_others(rows.ncols(), &players)?;
    let table = ValueTable::compute(model, rows, background, &universe)?;
    let h1 = table.shapley();
    let h2 = table.shapley_taylor(2)?;
    let treated: Vec<bool> = rows.rows().map(|r| r[t_index] != 0.0).collect();
    let tf = treatment_decompose(&h1, &h2, t_index, &treated)?;
    Ok(TreatmentAnalysis { h1, h2, tf })
}

/// The treatment function of `model` at `rows`.
pub fn treatment_function_eval(
    model: &dyn Predict,
    rows: &Matrix,
    background: &BackgroundSet,
    keep: &[usize],
    t_index: usize,
) -> Result<TreatmentFunction> {
    Ok(treatment_analysis(model, rows, background, keep, t_index)?.tf)
}
