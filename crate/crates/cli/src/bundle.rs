//! Report bundle files: JSON manifests and figure-data CSVs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use shapreg::crossfit::{AtStage, CrossFitReport, CurveFit, Stage, StageResult, SweepCell, TreatmentSummary};
use shapreg::data::fmt_num;
use shapreg::inference::CoefficientRow;
use shapreg::models::LearningCurve;
use shapreg::treatment::{polyval, SimConfig, TreatmentFunction};
use shapreg::{Dataset, Error, ModelSpec, Result};

use crate::config::RunConfig;

/// Points per fitted interaction curve in `curves.csv`.
const CURVE_POINTS: usize = 50;

/// Pretty JSON with a trailing newline; a failed write is a config error.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> StageResult<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let write = || -> Result<()> {
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w).map_err(io)?;
        w.flush().map_err(io)
    };
    write().at(Stage::Config)
}

fn flush(w: &mut csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Serialize)]
pub struct Truth {
    pub m: usize,
    pub beta: [f64; 4],
    pub seed: u64,
    pub noise_ratio: f64,
    pub noise_sd: f64,
    pub signal_sd: f64,
    pub ate: f64,
    pub formula: &'static str,
}

impl Truth {
    pub fn of(sim: &SimConfig) -> Self {
        Truth {
            m: sim.m,
            beta: sim.beta,
            seed: sim.seed,
            noise_ratio: sim.noise_ratio,
            noise_sd: sim.noise_sd(),
            signal_sd: sim.signal_sd(),
            ate: sim.true_ate(),
            formula: "y = b1 t + b2 t x1 + b3 x1 x2 + b4 + noise",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum XiSource {
    None,
    Config,
    LearningCurve,
}

#[derive(Debug, Serialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub background_rows: usize,
    pub phi0: f64,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub ci_ratio: f64,
    pub dof: usize,
    pub dropped: Vec<String>,
    pub ate: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct TreatmentManifest {
    pub ate: f64,
    pub confounding_gap: Option<f64>,
    pub interaction_labels: Vec<String>,
    pub curves: Vec<CurveFit>,
}

#[derive(Debug, Serialize)]
pub struct Seeds {
    /// Fold assignment; fold `k` trains with model seed `folds + k`.
    pub folds: u64,
    pub data: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "K_required")]
    pub k_required: usize,
    pub max_folds: Option<usize>,
    pub xi: Option<f64>,
    pub xi_source: XiSource,
    pub phi00: f64,
    pub alpha: f64,
    pub alpha_v: f64,
    pub seeds: Seeds,
    pub rows: usize,
    pub features: Vec<String>,
    pub target: String,
    pub treatment: Option<String>,
    pub model: ModelSpec,
    pub background: String,
    pub h: usize,
    pub adjust_ci: bool,
    pub terms: Vec<String>,
    pub region_size: usize,
    pub table: Vec<CoefficientRow>,
    pub treatment_effect: Option<TreatmentManifest>,
    pub true_ate: Option<f64>,
    pub folds: Vec<FoldSummary>,
    pub learning_curve: Option<LearningCurve>,
}

impl Manifest {
    pub fn new(
        cfg: &RunConfig,
        ds: &Dataset,
        report: &CrossFitReport,
        k_required: usize,
        xi_source: XiSource,
        learning_curve: Option<LearningCurve>,
    ) -> Self {
        let sim = cfg.is_simulation();
        Manifest {
            k: report.k,
            k_required,
            max_folds: cfg.max_folds,
            xi: report.xi,
            xi_source,
            phi00: report.phi00,
            alpha: report.alpha,
            alpha_v: report.alpha_v,
            seeds: Seeds {
                folds: cfg.seed,
                data: sim.then_some(cfg.simulation.seed),
            },
            rows: ds.n_rows(),
            features: ds.names().to_vec(),
            target: cfg.target.clone(),
            treatment: ds.treatment_index().map(|t| ds.names()[t].clone()),
            model: cfg.model.clone(),
            background: cfg.background.to_string(),
            h: cfg.h,
            adjust_ci: cfg.adjust_ci,
            terms: report.terms.clone(),
            region_size: report.region_size,
            table: report.table.rows.clone(),
            treatment_effect: report.treatment.as_ref().map(|t| TreatmentManifest {
                ate: t.ate,
                confounding_gap: t.confounding_gap,
                interaction_labels: t.interaction_labels.clone(),
                curves: t.curves.clone(),
            }),
            true_ate: sim.then(|| cfg.simulation.true_ate()),
            folds: report
                .folds
                .iter()
                .map(|f| FoldSummary {
                    fold: f.fold,
                    train_rows: f.train_rows,
                    test_rows: f.test_rows,
                    background_rows: f.background_rows,
                    phi0: f.phi0,
                    train_rmse: f.train_rmse,
                    test_rmse: f.test_rmse,
                    ci_ratio: f.ci_ratio,
                    dof: f.fit.dof,
                    dropped: f
                        .fit
                        .terms
                        .iter()
                        .zip(&f.fit.estimates)
                        .filter(|(_, e)| e.is_none())
                        .map(|(t, _)| t.clone())
                        .collect(),
                    ate: f.ate,
                })
                .collect(),
            learning_curve,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SweepManifest {
    #[serde(rename = "K")]
    pub k: usize,
    pub xi: Option<f64>,
    pub alpha: f64,
    pub alpha_v: f64,
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub model: ModelSpec,
    pub background: String,
    pub h: usize,
    /// Data and fold seed of each cell, in `sweep.csv` order.
    pub cell_seeds: Vec<u64>,
    pub true_ate: Option<f64>,
}

impl SweepManifest {
    pub fn new(cfg: &RunConfig, k: usize, xi: Option<f64>, cells: &[SweepCell]) -> Self {
        SweepManifest {
            k,
            xi,
            alpha: cfg.alpha,
            alpha_v: 2.0 * cfg.alpha,
            sizes: cfg.sizes.clone(),
            reps: cfg.reps,
            model: cfg.model.clone(),
            background: cfg.background.to_string(),
            h: cfg.h,
            cell_seeds: cells.iter().map(|c| c.seed).collect(),
            true_ate: cfg.is_simulation().then(|| cfg.simulation.true_ate()),
        }
    }
}

/// Treatment-function rows of every fold, each with its own fold's base value.
pub fn write_tf_csv(path: &Path, parts: &[TreatmentFunction], names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["row_id".to_string(), "treated".into(), "phi00".into(), "bare_t".into()];
    header.extend(parts[0].interaction_labels(names));
    header.push("phi_z".into());
    w.write_record(&header)?;
    for p in parts {
        for i in 0..p.n_rows() {
            let mut rec = vec![
                p.row_ids[i].to_string(),
                (p.treated[i] as u8).to_string(),
                fmt_num(p.phi00),
                fmt_num(p.bare_t[i]),
            ];
            rec.extend(p.interactions.row(i).iter().map(|&v| fmt_num(v)));
            rec.push(fmt_num(p.phi_z[i]));
            w.write_record(&rec)?;
        }
    }
    flush(&mut w, path)
}

/// Fitted interaction curves on an even grid over the treated rows' covariate range.
pub fn write_curves_csv(path: &Path, t: &TreatmentSummary, ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["term", "covariate", "x", "fitted"])?;
    for c in &t.curves {
        let col = ds
            .column_index(&c.covariate)
            .ok_or_else(|| Error::MissingColumn(c.covariate.clone()))?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &t.parts {
            for (i, &row) in p.row_ids.iter().enumerate() {
                if p.treated[i] {
                    let x = ds.features().get(row, col);
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
            }
        }
        for q in 0..CURVE_POINTS {
            let x = lo + (hi - lo) * q as f64 / (CURVE_POINTS - 1) as f64;
            w.write_record([
                c.term.clone(),
                c.covariate.clone(),
                fmt_num(x),
                fmt_num(polyval(&c.coefficients, x)),
            ])?;
        }
    }
    flush(&mut w, path)
}

pub fn write_learning_curve_csv(path: &Path, lc: &LearningCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["size", "rmse", "in_fit"])?;
    for (q, (s, l)) in lc.sizes.iter().zip(&lc.losses).enumerate() {
        let in_fit = q >= lc.fit_range.0 && q <= lc.fit_range.1;
        w.write_record([s.to_string(), fmt_num(*l), (in_fit as u8).to_string()])?;
    }
    flush(&mut w, path)
}
