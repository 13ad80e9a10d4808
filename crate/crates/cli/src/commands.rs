//! The four subcommands.

use shapreg::crossfit::{self, AtStage, Stage, StageResult};
use shapreg::data::{load_csv, write_csv};
use shapreg::inference::required_folds;
use shapreg::models::{learning_curve, Holdout, LearningCurve};
use shapreg::treatment::{simulate_dgp, DgpSource, SimConfig};
use shapreg::{Dataset, Error};

use crate::bundle::{self, Manifest, SweepManifest, Truth, XiSource};
use crate::config::{Auto, Overrides, RunConfig};

fn ingest(cfg: &RunConfig) -> StageResult<Dataset> {
    if cfg.is_simulation() {
        cfg.simulation.validate().at(Stage::Config)?;
        simulate_dgp(&cfg.simulation).at(Stage::Ingestion)
    } else {
        load_csv(cfg.input.as_ref(), &cfg.target, cfg.treatment.as_deref()).at(Stage::Ingestion)
    }
}

fn keep_indices(cfg: &RunConfig, ds: &Dataset) -> StageResult<Option<Vec<usize>>> {
    let Some(names) = &cfg.keep else {
        return Ok(None);
    };
    names
        .iter()
        .map(|n| ds.column_index(n).ok_or_else(|| Error::MissingColumn(n.clone())))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
        .at(Stage::Config)
}

fn prepare_output(cfg: &RunConfig) -> StageResult<()> {
    std::fs::create_dir_all(&cfg.output)
        .map_err(|source| Error::Io {
            path: cfg.output.clone(),
            source,
        })
        .at(Stage::Config)?;
    bundle::write_json(&cfg.output.join("config.json"), cfg)
}

fn check_alpha(cfg: &RunConfig) -> StageResult<()> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "alpha {} is outside (0, 0.5)",
            cfg.alpha
        )))
        .at(Stage::Config);
    }
    Ok(())
}

/// Rate from the config, or from a learning curve on the data when `auto`.
fn resolve_xi(cfg: &RunConfig, ds: &Dataset) -> StageResult<(Option<f64>, XiSource, Option<LearningCurve>)> {
    match cfg.xi {
        None => Ok((None, XiSource::None, None)),
        Some(Auto::Fixed(xi)) => Ok((Some(xi), XiSource::Config, None)),
        Some(Auto::Auto) => {
            let lc = crossfit::auto_xi(&cfg.model, ds, cfg.seed).at(Stage::Training)?;
            log::info!("learning-curve rate xi = {:.4}", lc.xi);
            Ok((Some(lc.xi), XiSource::LearningCurve, Some(lc)))
        }
    }
}

/// `(K used, K required)`; the cap applies to both fixed and derived counts.
fn resolve_k(cfg: &RunConfig, m: usize, xi: Option<f64>) -> StageResult<(usize, usize)> {
    let required = match (cfg.k, xi) {
        (Auto::Fixed(k), _) => k,
        (Auto::Auto, Some(xi)) if xi > 0.0 => required_folds(m, xi),
        (Auto::Auto, _) => {
            return Err(Error::InvalidArgument(
                "K = auto needs a positive rate xi (a number or auto)".into(),
            ))
            .at(Stage::Config)
        }
    };
    let used = match cfg.max_folds {
        Some(cap) if cap < required => {
            log::warn!("capping K at --max-folds {cap}; the rate implies {required} folds, so intervals are not rate-calibrated");
            eprintln!("WARNING: K capped at {cap} (required {required})");
            cap
        }
        _ => required,
    };
    if used < 2 {
        return Err(Error::InvalidArgument(format!(
            "K = {used} but at least two folds are needed"
        )))
        .at(Stage::Config);
    }
    Ok((used, required))
}

pub fn simulate(o: &Overrides) -> StageResult<()> {
    let cfg = RunConfig::resolve(o).at(Stage::Config)?;
    cfg.simulation.validate().at(Stage::Config)?;
    let ds = simulate_dgp(&cfg.simulation).at(Stage::Ingestion)?;
    prepare_output(&cfg)?;
    write_csv(&ds, &cfg.target, &cfg.output.join("data.csv")).at(Stage::Config)?;
    bundle::write_json(&cfg.output.join("truth.json"), &Truth::of(&cfg.simulation))
}

pub fn run(o: &Overrides) -> StageResult<()> {
    let cfg = RunConfig::resolve(o).at(Stage::Config)?;
    check_alpha(&cfg)?;
    let ds = ingest(&cfg)?;
    let keep = keep_indices(&cfg, &ds)?;
    let (xi, xi_source, lc) = resolve_xi(&cfg, &ds)?;
    let (k, k_required) = resolve_k(&cfg, ds.n_rows(), xi)?;
    prepare_output(&cfg)?;
    let report = crossfit::run_crossfit(&ds, &cfg.crossfit(keep, k, xi))?;
    let out = &cfg.output;
    report
        .table
        .write_csv(&out.join("coefficients.csv"))
        .at(Stage::Config)?;
    report.write_folds_csv(&out.join("folds.csv")).at(Stage::Config)?;
    if let Some(t) = &report.treatment {
        bundle::write_tf_csv(&out.join("tf.csv"), &t.parts, ds.names()).at(Stage::Config)?;
        bundle::write_curves_csv(&out.join("curves.csv"), t, &ds).at(Stage::Config)?;
    }
    if let Some(lc) = &lc {
        bundle::write_learning_curve_csv(&out.join("learning_curve.csv"), lc).at(Stage::Config)?;
    }
    let manifest = Manifest::new(&cfg, &ds, &report, k_required, xi_source, lc);
    bundle::write_json(&out.join("manifest.json"), &manifest)
}

pub fn sweep(o: &Overrides) -> StageResult<()> {
    let cfg = RunConfig::resolve(o).at(Stage::Config)?;
    check_alpha(&cfg)?;
    let Auto::Fixed(k) = cfg.k else {
        return Err(Error::InvalidArgument("sweep needs a fixed K".into())).at(Stage::Config);
    };
    let xi = match cfg.xi {
        Some(Auto::Fixed(xi)) => Some(xi),
        None => None,
        Some(Auto::Auto) => {
            return Err(Error::InvalidArgument("sweep needs a fixed xi or none".into())).at(Stage::Config)
        }
    };
    let base = if cfg.is_simulation() {
        cfg.simulation.validate().at(Stage::Config)?;
        None
    } else {
        Some(ingest(&cfg)?)
    };
    let names: Vec<String> = match &base {
        Some(ds) => ds.names().to_vec(),
        None => shapreg::treatment::SIM_COLUMNS.iter().map(|s| s.to_string()).collect(),
    };
    let keep = match &cfg.keep {
        None => None,
        Some(keep) => Some(
            keep.iter()
                .map(|n| {
                    names
                        .iter()
                        .position(|c| c == n)
                        .ok_or_else(|| Error::MissingColumn(n.clone()))
                })
                .collect::<Result<Vec<_>, _>>()
                .at(Stage::Config)?,
        ),
    };
    prepare_output(&cfg)?;
    let draw = |size: usize, seed: u64| match &base {
        Some(ds) => crossfit::subsample(ds, size, seed),
        None => simulate_dgp(&SimConfig {
            m: size,
            seed,
            ..cfg.simulation.clone()
        }),
    };
    let cells = crossfit::sweep(&draw, &cfg.sizes, cfg.reps, &cfg.crossfit(keep, k, xi))?;
    crossfit::write_sweep_csv(&cells, &cfg.output.join("sweep.csv")).at(Stage::Config)?;
    bundle::write_json(
        &cfg.output.join("manifest.json"),
        &SweepManifest::new(&cfg, k, xi, &cells),
    )
}

pub fn curve(o: &Overrides) -> StageResult<()> {
    let cfg = RunConfig::resolve(o).at(Stage::Config)?;
    let lc = if cfg.sizes.is_empty() {
        let ds = ingest(&cfg)?;
        crossfit::auto_xi(&cfg.model, &ds, cfg.seed).at(Stage::Training)?
    } else if cfg.is_simulation() {
        cfg.simulation.validate().at(Stage::Config)?;
        let source = DgpSource {
            config: cfg.simulation.clone(),
            test_size: cfg.curve_test_size,
        };
        learning_curve(&cfg.model, &source, &cfg.sizes, cfg.reps, cfg.seed).at(Stage::Training)?
    } else {
        let ds = ingest(&cfg)?;
        let source = Holdout {
            data: &ds,
            test_size: cfg.curve_test_size,
        };
        learning_curve(&cfg.model, &source, &cfg.sizes, cfg.reps, cfg.seed).at(Stage::Training)?
    };
    prepare_output(&cfg)?;
    bundle::write_learning_curve_csv(&cfg.output.join("learning_curve.csv"), &lc).at(Stage::Config)?;
    bundle::write_json(&cfg.output.join("learning_curve.json"), &lc)
}
