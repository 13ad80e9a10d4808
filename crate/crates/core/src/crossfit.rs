//! Cross-fitted Shapley regression from a dataset to an aggregated coefficient table.
//!
//! Each fold trains on the other folds, decomposes its own rows against a
//! background drawn from the training rows, and runs the surrogate regression.
//! Fold results are combined with VEIN medians.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    fmt_num, kmeans_background, make_folds, train_background, untreated_background, BackgroundSet, CentroidWeights,
    Dataset, KMeansOptions,
};
use crate::error::{Error, Result};
use crate::inference::{
    adjust_ci, shapley_regression, smc, ssc, term_signs, vein_aggregate, CoefficientTable, ComponentTable, SeMode,
    ShapleyRegressionFit, Sign, VeinSummary,
};
use crate::matrix::Matrix;
use crate::models::{fit_linear, learning_curve, rmse, Holdout, Learner, LearningCurve, LinearModel, ModelSpec};
use crate::shapley::{group_others, Player, Universe, ValueTable};
use crate::stats::median;
use crate::treatment::{interaction_curve, treatment_decompose, TreatmentFunction};

/// Pipeline stage that produced an error; each maps to a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Ingestion,
    Training,
    Decomposition,
    Inference,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Ingestion => 3,
            Stage::Training => 4,
            Stage::Decomposition => 5,
            Stage::Inference => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingestion => "ingestion",
            Stage::Training => "training",
            Stage::Decomposition => "decomposition",
            Stage::Inference => "inference",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

pub trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

pub type StageResult<T> = std::result::Result<T, StageError>;

/// Which training rows form the background of each fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BackgroundPolicy {
    TrainAll,
    Untreated,
    /// k-means centroids of the untreated training rows, or of all training
    /// rows when there is no treatment column.
    Centroids(usize),
}

impl FromStr for BackgroundPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train-all" => Ok(BackgroundPolicy::TrainAll),
            "untreated" => Ok(BackgroundPolicy::Untreated),
            _ => {
                let c = s
                    .strip_prefix("centroids:")
                    .and_then(|c| c.parse::<usize>().ok())
                    .filter(|&c| c > 0)
                    .ok_or_else(|| {
                        Error::invalid(format!(
                            "background `{s}` is not train-all, untreated or centroids:<count>"
                        ))
                    })?;
                Ok(BackgroundPolicy::Centroids(c))
            }
        }
    }
}

impl TryFrom<String> for BackgroundPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BackgroundPolicy> for String {
    fn from(p: BackgroundPolicy) -> String {
        p.to_string()
    }
}

impl fmt::Display for BackgroundPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackgroundPolicy::TrainAll => f.write_str("train-all"),
            BackgroundPolicy::Untreated => f.write_str("untreated"),
            BackgroundPolicy::Centroids(c) => write!(f, "centroids:{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossFitConfig {
    pub model: ModelSpec,
    /// Features kept as individual players; the rest are grouped as `others`.
    /// `None` keeps every feature.
    pub keep: Option<Vec<usize>>,
    pub h: usize,
    pub background: BackgroundPolicy,
    pub centroid_weights: CentroidWeights,
    pub alpha: f64,
    pub se_mode: SeMode,
    #[serde(rename = "K")]
    pub k: usize,
    pub xi: Option<f64>,
    /// Widen fold intervals by the ratio implied by `xi`.
    pub adjust_ci: bool,
    pub seed: u64,
    pub curve_degree: usize,
}

impl Default for CrossFitConfig {
    fn default() -> Self {
        CrossFitConfig {
            model: ModelSpec::Linear,
            keep: None,
            h: 1,
            background: BackgroundPolicy::TrainAll,
            centroid_weights: CentroidWeights::ClusterSize,
            alpha: 0.05,
            se_mode: SeMode::Hc1,
            k: 2,
            xi: None,
            adjust_ci: false,
            seed: 0,
            curve_degree: 4,
        }
    }
}

impl CrossFitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::invalid(format!("alpha {} is outside (0, 0.5)", self.alpha)));
        }
        if self.k < 2 {
            return Err(Error::invalid(format!(
                "K = {} but at least two folds are needed",
                self.k
            )));
        }
        if self.h == 0 {
            return Err(Error::invalid("h must be at least 1"));
        }
        if let Some(xi) = self.xi {
            if !(xi > 0.0 && xi.is_finite()) {
                return Err(Error::invalid(format!("xi {xi} must be positive")));
            }
        } else if self.adjust_ci {
            return Err(Error::invalid("interval adjustment needs a convergence rate xi"));
        }
        Ok(())
    }
}

/// Players: kept features and the treatment individually, everything else grouped.
pub fn build_universe(n: usize, keep: Option<&[usize]>, treatment: Option<usize>) -> Result<Universe> {
    match keep {
        None => Ok(Universe::all(n)),
        Some(keep) => {
            let mut players = keep.to_vec();
            if let Some(t) = treatment {
                if !players.contains(&t) {
                    players.push(t);
                }
            }
            group_others(n, &players)
        }
    }
}

/// Rate estimate from a 5-point learning curve with 3 repetitions on `ds`.
///
/// A fifth of the rows is held out; training sizes double up to the rest.
pub fn auto_xi(spec: &ModelSpec, ds: &Dataset, seed: u64) -> Result<LearningCurve> {
    let m = ds.n_rows();
    let test_size = (m / 5).max(1);
    let available = m.saturating_sub(test_size);
    let smallest = (available / 16).max(ds.n_features() + 3);
    if smallest >= available {
        return Err(Error::invalid(format!("{m} rows are too few for a learning curve")));
    }
    let mut sizes: Vec<usize> = (0..5)
        .map(|q| {
            let frac = q as f64 / 4.0;
            (smallest as f64 * (available as f64 / smallest as f64).powf(frac)).round() as usize
        })
        .collect();
    sizes.dedup();
    if sizes.len() < 5 {
        return Err(Error::invalid(format!("{m} rows are too few for a learning curve")));
    }
    let source = Holdout { data: ds, test_size };
    learning_curve(spec, &source, &sizes, 3, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub background_rows: usize,
    pub phi0: f64,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub ci_ratio: f64,
    pub fit: ShapleyRegressionFit,
    pub signs: Vec<Sign>,
    pub shares: Vec<f64>,
    pub means: Vec<f64>,
    /// OLS slopes on the training folds, when the fit exists.
    pub linear_coefficients: Option<Vec<f64>>,
    pub ate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFit {
    pub term: String,
    pub covariate: String,
    /// Ascending-degree polynomial coefficients.
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentSummary {
    /// Mean treatment effect over all held-out treated rows.
    pub ate: f64,
    /// Treated minus untreated mean of `phi_z`, if both groups occur.
    pub confounding_gap: Option<f64>,
    pub interaction_labels: Vec<String>,
    pub curves: Vec<CurveFit>,
    #[serde(skip)]
    pub parts: Vec<TreatmentFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossFitReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub xi: Option<f64>,
    pub alpha: f64,
    pub alpha_v: f64,
    /// Mean base value over folds.
    pub phi00: f64,
    pub terms: Vec<String>,
    pub universe: Universe,
    pub folds: Vec<FoldReport>,
    pub vein: VeinSummary,
    pub table: CoefficientTable,
    /// Rows entering the pooled shares.
    pub region_size: usize,
    pub treatment: Option<TreatmentSummary>,
}

struct FoldOutput {
    report: FoldReport,
    components: ComponentTable,
    tf: Option<TreatmentFunction>,
}

fn fold_background(ds: &Dataset, train: &[usize], cfg: &CrossFitConfig, fold: usize) -> Result<BackgroundSet> {
    match cfg.background {
        BackgroundPolicy::TrainAll => train_background(ds, train),
        BackgroundPolicy::Untreated => untreated_background(ds, train),
        BackgroundPolicy::Centroids(c) => {
            let base = match ds.treatment_index() {
                Some(_) => untreated_background(ds, train)?,
                None => train_background(ds, train)?,
            };
            let rows = base.rows();
            if c > rows.nrows() {
                log::warn!("fold {fold}: {c} centroids requested from {} rows", rows.nrows());
            }
            kmeans_background(
                rows,
                KMeansOptions {
                    weights: cfg.centroid_weights,
                    ..KMeansOptions::new(c.min(rows.nrows()), cfg.seed.wrapping_add(fold as u64))
                },
            )
        }
    }
}

/// Median OLS slope per feature across folds; its sign labels the pooled table.
fn pooled_linear(folds: &[FoldReport], n: usize) -> Option<LinearModel> {
    let slopes: Vec<&Vec<f64>> = folds.iter().filter_map(|f| f.linear_coefficients.as_ref()).collect();
    if slopes.is_empty() {
        return None;
    }
    Some(LinearModel {
        intercept: 0.0,
        coefficients: (0..n)
            .map(|j| median(&slopes.iter().map(|s| s[j]).collect::<Vec<_>>()))
            .collect(),
    })
}

fn signs_for(universe: &Universe, d_terms: &[crate::shapley::Coalition], linear: Option<&LinearModel>) -> Vec<Sign> {
    match linear {
        Some(lm) => term_signs(universe, d_terms, lm),
        None => vec![Sign::NotApplicable; d_terms.len()],
    }
}

fn run_fold(
    ds: &Dataset,
    universe: &Universe,
    train: &[usize],
    test: &[usize],
    fold: usize,
    cfg: &CrossFitConfig,
) -> StageResult<FoldOutput> {
    let train_ds = ds.subset(train);
    let model = cfg
        .model
        .with_seed(cfg.seed.wrapping_add(fold as u64))
        .fit(&train_ds)
        .at(Stage::Training)?;
    let bg = fold_background(ds, train, cfg, fold).at(Stage::Decomposition)?;
    let rows = ds.features().select_rows(test);
    let table = ValueTable::compute(&model, &rows, &bg, universe).at(Stage::Decomposition)?;
    let decomp = match cfg.h {
        1 => table.shapley(),
        h => table.shapley_taylor(h).at(Stage::Decomposition)?,
    }
    .with_row_ids(test.to_vec())
    .at(Stage::Decomposition)?;

    let tf = match ds.treatment_index() {
        Some(t) if universe.player_of(t).is_some() && universe.len() >= 2 => {
            let h1 = table.shapley().with_row_ids(test.to_vec()).at(Stage::Decomposition)?;
            let h2 = if cfg.h == 2 {
                decomp.clone()
            } else {
                table
                    .shapley_taylor(2)
                    .and_then(|d| d.with_row_ids(test.to_vec()))
                    .at(Stage::Decomposition)?
            };
            let treated: Vec<bool> = test.iter().map(|&i| ds.features().get(i, t) != 0.0).collect();
            Some(treatment_decompose(&h1, &h2, t, &treated).at(Stage::Decomposition)?)
        }
        _ => None,
    };

    let components = ComponentTable::from_decomposition(&decomp, ds.names());
    let y: Vec<f64> = test.iter().map(|&i| ds.target()[i]).collect();
    let mut fit = shapley_regression(&components, &y, cfg.se_mode, cfg.alpha).at(Stage::Inference)?;
    fit.fold = Some(fold);
    let mut ratio = 1.0;
    if cfg.adjust_ci {
        let xi = cfg.xi.expect("validated");
        (fit, ratio) = adjust_ci(&fit, train.len(), xi, 2.0 * cfg.alpha);
    }

    let linear_coefficients = match fit_linear_slopes(&train_ds) {
        Ok(TrainedLinear { coefficients }) => Some(coefficients),
        Err(e) => {
            log::warn!("fold {fold}: no OLS fit for term signs ({e})");
            None
        }
    };
    let linear = linear_coefficients.as_ref().map(|c| LinearModel {
        intercept: 0.0,
        coefficients: c.clone(),
    });
    let signs = signs_for(universe, decomp.terms(), linear.as_ref());
    let region: Vec<usize> = (0..test.len()).collect();
    let shares = ssc(&components, &signs, &region).at(Stage::Inference)?.shares;
    let means = smc(&components, &signs, &region).at(Stage::Inference)?;
    let ate = tf.as_ref().and_then(|tf| crate::treatment::ate(tf).ok());

    Ok(FoldOutput {
        report: FoldReport {
            fold,
            train_rows: train.len(),
            test_rows: test.len(),
            background_rows: bg.len(),
            phi0: decomp.phi0(),
            train_rmse: model.base_loss,
            test_rmse: rmse(decomp.predictions(), &y),
            ci_ratio: ratio,
            fit,
            signs,
            shares,
            means,
            linear_coefficients,
            ate,
        },
        components,
        tf,
    })
}

struct TrainedLinear {
    coefficients: Vec<f64>,
}

fn fit_linear_slopes(ds: &Dataset) -> Result<TrainedLinear> {
    match fit_linear(ds)?.learner {
        Learner::Linear(lm) => Ok(TrainedLinear {
            coefficients: lm.coefficients,
        }),
        _ => unreachable!("fit_linear returns a linear learner"),
    }
}

fn stack(parts: &[&ComponentTable]) -> Result<ComponentTable> {
    let ncols = parts[0].n_terms();
    let mut values = Matrix::zeros(0, ncols);
    let mut predictions = Vec::new();
    for p in parts {
        for i in 0..p.n_rows() {
            values.push_row(p.values.row(i))?;
        }
        predictions.extend_from_slice(&p.predictions);
    }
    ComponentTable::new(0.0, parts[0].labels.clone(), values, predictions)
}

fn pooled_tf(parts: &[TreatmentFunction], ds: &Dataset, degree: usize) -> Result<TreatmentSummary> {
    let first = &parts[0];
    let treated: Vec<bool> = parts.iter().flat_map(|p| p.treated.iter().copied()).collect();
    let effects: Vec<f64> = parts
        .iter()
        .flat_map(|p| (0..p.n_rows()).map(move |i| p.effect(i)))
        .collect();
    let n_treated = treated.iter().filter(|t| **t).count();
    if n_treated == 0 {
        return Err(Error::NoTreated);
    }
    let ate = effects
        .iter()
        .zip(&treated)
        .filter(|(_, t)| **t)
        .map(|(e, _)| e)
        .sum::<f64>()
        / n_treated as f64;
    let z: Vec<f64> = parts.iter().flat_map(|p| p.phi_z.iter().copied()).collect();
    let n_untreated = treated.len() - n_treated;
    let confounding_gap = (n_untreated > 0).then(|| {
        let (mut a, mut b) = (0.0, 0.0);
        for (v, t) in z.iter().zip(&treated) {
            if *t {
                a += v;
            } else {
                b += v;
            }
        }
        a / n_treated as f64 - b / n_untreated as f64
    });
    let labels = first.interaction_labels(ds.names());
    let row_ids: Vec<usize> = parts.iter().flat_map(|p| p.row_ids.iter().copied()).collect();
    let mut curves = Vec::new();
    for (col, &k) in first.covariates.iter().enumerate() {
        let Player::Feature(f) = first.universe.players()[k] else {
            continue;
        };
        let values: Vec<f64> = parts.iter().flat_map(|p| p.interactions.column(col)).collect();
        let covariate: Vec<f64> = row_ids.iter().map(|&i| ds.features().get(i, f)).collect();
        match interaction_curve(&values, &covariate, &treated, degree) {
            Ok(coefficients) => curves.push(CurveFit {
                term: labels[col].clone(),
                covariate: ds.names()[f].clone(),
                coefficients,
            }),
            Err(e) => log::warn!("no interaction curve for {}: {e}", labels[col]),
        }
    }
    Ok(TreatmentSummary {
        ate,
        confounding_gap,
        interaction_labels: labels,
        curves,
        parts: parts.to_vec(),
    })
}

/// Runs every fold and aggregates them.
pub fn run_crossfit(ds: &Dataset, cfg: &CrossFitConfig) -> StageResult<CrossFitReport> {
    cfg.validate().at(Stage::Config)?;
    let universe = build_universe(ds.n_features(), cfg.keep.as_deref(), ds.treatment_index()).at(Stage::Config)?;
    let plan = make_folds(ds.n_rows(), cfg.k, cfg.seed).at(Stage::Config)?;
    let outputs: Vec<FoldOutput> = (1..=cfg.k)
        .into_par_iter()
        .map(|fold| run_fold(ds, &universe, &plan.train_rows(fold), &plan.test_rows(fold), fold, cfg))
        .collect::<StageResult<_>>()?;

    let fits: Vec<ShapleyRegressionFit> = outputs.iter().map(|o| o.report.fit.clone()).collect();
    let vein = vein_aggregate(&fits, cfg.alpha).at(Stage::Inference)?;
    let reports: Vec<FoldReport> = outputs.iter().map(|o| o.report.clone()).collect();

    let terms = universe.terms(cfg.h);
    let linear = pooled_linear(&reports, ds.n_features());
    if linear.is_none() {
        log::warn!("no fold produced an OLS fit; term signs are n.a.");
    }
    let signs = signs_for(&universe, &terms, linear.as_ref());
    let pooled = stack(&outputs.iter().map(|o| &o.components).collect::<Vec<_>>()).at(Stage::Inference)?;
    let region: Vec<usize> = (0..pooled.n_rows()).collect();
    let shares = ssc(&pooled, &signs, &region).at(Stage::Inference)?;
    let means = smc(&pooled, &signs, &region).at(Stage::Inference)?;
    let table =
        CoefficientTable::build(&vein, &signs, &shares.shares, &means, shares.rows_used).at(Stage::Inference)?;

    let parts: Vec<TreatmentFunction> = outputs.into_iter().filter_map(|o| o.tf).collect();
    let treatment = if parts.is_empty() {
        None
    } else {
        Some(pooled_tf(&parts, ds, cfg.curve_degree).at(Stage::Inference)?)
    };

    Ok(CrossFitReport {
        k: cfg.k,
        xi: cfg.xi,
        alpha: cfg.alpha,
        alpha_v: vein.alpha_v,
        phi00: reports.iter().map(|r| r.phi0).sum::<f64>() / reports.len() as f64,
        terms: vein.terms.clone(),
        universe,
        folds: reports,
        vein,
        table,
        region_size: shares.rows_used,
        treatment,
    })
}

impl CrossFitReport {
    /// Per-fold diagnostics, one line per fold and term.
    pub fn write_folds_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "fold",
            "train_rows",
            "test_rows",
            "background_rows",
            "phi0",
            "train_rmse",
            "test_rmse",
            "ci_ratio",
            "term",
            "beta_S",
            "se",
            "p_H0",
            "ci_low",
            "ci_high",
            "share",
            "mean",
        ])?;
        let num = |v: Option<f64>| v.map_or(String::new(), fmt_num);
        for f in &self.folds {
            for (j, term) in f.fit.terms.iter().enumerate() {
                let e = f.fit.estimates[j];
                w.write_record([
                    f.fold.to_string(),
                    f.train_rows.to_string(),
                    f.test_rows.to_string(),
                    f.background_rows.to_string(),
                    fmt_num(f.phi0),
                    fmt_num(f.train_rmse),
                    fmt_num(f.test_rmse),
                    fmt_num(f.ci_ratio),
                    term.clone(),
                    e.map_or("undefined".into(), |e| fmt_num(e.beta)),
                    num(e.map(|e| e.se)),
                    num(e.map(|e| e.p_null)),
                    num(e.map(|e| e.ci_low)),
                    num(e.map(|e| e.ci_high)),
                    fmt_num(f.shares[j]),
                    fmt_num(f.means[j]),
                ])?;
            }
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// One cell of a sample-size sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub size: usize,
    pub rep: usize,
    pub seed: u64,
    pub report: CrossFitReport,
}

/// Runs the cross-fit on `reps` datasets of each size from `draw(size, seed)`.
///
/// Cell `q * reps + r` uses data and fold seed `cfg.seed + cell`.
pub fn sweep(
    draw: &(dyn Fn(usize, u64) -> Result<Dataset> + Sync),
    sizes: &[usize],
    reps: usize,
    cfg: &CrossFitConfig,
) -> StageResult<Vec<SweepCell>> {
    if sizes.is_empty() || reps == 0 {
        return Err(Error::invalid("sweep needs sizes and at least one repetition")).at(Stage::Config);
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sweep sizes must be strictly ascending")).at(Stage::Config);
    }
    let cells: Vec<(usize, usize)> = sizes.iter().flat_map(|&s| (0..reps).map(move |r| (s, r))).collect();
    cells
        .par_iter()
        .enumerate()
        .map(|(cell, &(size, rep))| {
            let seed = cfg.seed.wrapping_add(cell as u64);
            let ds = draw(size, seed).at(Stage::Ingestion)?;
            let report = run_crossfit(&ds, &CrossFitConfig { seed, ..cfg.clone() })?;
            Ok(SweepCell {
                size,
                rep,
                seed,
                report,
            })
        })
        .collect()
}

/// Seeded sub-sample of `size` rows without replacement.
pub fn subsample(ds: &Dataset, size: usize, seed: u64) -> Result<Dataset> {
    if size > ds.n_rows() {
        return Err(Error::invalid(format!("cannot draw {size} rows from {}", ds.n_rows())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, ds.n_rows(), size).into_vec();
    idx.sort_unstable();
    Ok(ds.subset(&idx))
}

/// Long-format sweep results: one line per cell and term.
pub fn write_sweep_csv(cells: &[SweepCell], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "size", "rep", "seed", "term", "beta_S", "ci_low", "ci_high", "p_H0", "share", "mean", "ate",
    ])?;
    let num = |v: Option<f64>| v.map_or(String::new(), fmt_num);
    for c in cells {
        let ate = c.report.treatment.as_ref().map(|t| t.ate);
        for (j, row) in c.report.table.rows.iter().enumerate() {
            let e = c.report.vein.estimates[j];
            w.write_record([
                c.size.to_string(),
                c.rep.to_string(),
                c.seed.to_string(),
                row.term.clone(),
                e.map_or("undefined".into(), |e| fmt_num(e.beta)),
                num(e.map(|e| e.ci_low)),
                num(e.map(|e| e.ci_high)),
                num(e.map(|e| e.p_null)),
                fmt_num(row.share),
                fmt_num(row.mean),
                num(ate),
            ])?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
