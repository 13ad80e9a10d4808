//! Run configuration: a JSON file, with command-line flags layered on top.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use shapreg::crossfit::{BackgroundPolicy, CrossFitConfig};
use shapreg::data::CentroidWeights;
use shapreg::inference::SeMode;
use shapreg::models::{ModelKind, ModelSpec};
use shapreg::treatment::SimConfig;
use shapreg::Error;

/// A number, or `"auto"` to have the pipeline choose it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Auto<T> {
    Fixed(T),
    #[serde(with = "auto_tag")]
    Auto,
}

mod auto_tag {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        match String::deserialize(d)?.as_str() {
            "auto" => Ok(()),
            other => Err(de::Error::custom(format!(
                "expected a number or \"auto\", got {other:?}"
            ))),
        }
    }
}

impl<T: std::str::FromStr> std::str::FromStr for Auto<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Auto::Auto);
        }
        s.parse()
            .map(Auto::Fixed)
            .map_err(|_| format!("expected a number or `auto`, got `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// CSV path, or `simulate` to draw from the experiment simulation.
    pub input: String,
    pub target: String,
    pub treatment: Option<String>,
    pub model: ModelSpec,
    /// Feature names kept as players; the rest is grouped as `others`.
    pub keep: Option<Vec<String>>,
    pub h: usize,
    pub background: BackgroundPolicy,
    pub centroid_weights: CentroidWeights,
    pub alpha: f64,
    pub se_mode: SeMode,
    /// Convergence rate; `null` disables rate-dependent steps.
    pub xi: Option<Auto<f64>>,
    #[serde(rename = "K")]
    pub k: Auto<usize>,
    pub max_folds: Option<usize>,
    pub adjust_ci: bool,
    pub seed: u64,
    pub output: PathBuf,
    pub simulation: SimConfig,
    pub sizes: Vec<usize>,
    pub reps: usize,
    /// Held-out rows per learning-curve draw for simulated input.
    pub curve_test_size: usize,
    pub curve_degree: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: "simulate".into(),
            target: "y".into(),
            treatment: None,
            model: ModelSpec::Linear,
            keep: None,
            h: 1,
            background: BackgroundPolicy::TrainAll,
            centroid_weights: CentroidWeights::ClusterSize,
            alpha: 0.05,
            se_mode: SeMode::Hc1,
            xi: None,
            k: Auto::Fixed(2),
            max_folds: None,
            adjust_ci: false,
            seed: 0,
            output: PathBuf::from("out"),
            simulation: SimConfig::default(),
            sizes: Vec::new(),
            reps: 3,
            curve_test_size: 1000,
            curve_degree: 4,
        }
    }
}

/// Flags shared by every command; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV input path, or `simulate`.
    #[arg(long)]
    pub input: Option<String>,
    /// Target column name.
    #[arg(long)]
    pub target: Option<String>,
    /// Binary treatment column name.
    #[arg(long)]
    pub treatment: Option<String>,
    /// Model kind (`linear`, `forest`, `kernel`, `network`) or a JSON model spec.
    #[arg(long)]
    pub model: Option<String>,
    /// Comma-separated feature names kept as players.
    #[arg(long, value_delimiter = ',')]
    pub keep: Option<Vec<String>>,
    /// Decomposition order: 1 for Shapley values, 2 or more for Shapley-Taylor terms.
    #[arg(long)]
    pub h: Option<usize>,
    /// `train-all`, `untreated` or `centroids:<count>`.
    #[arg(long)]
    pub background: Option<BackgroundPolicy>,
    /// Centroid weights for `centroids:<count>`: `cluster-size` or `uniform`.
    #[arg(long, value_parser = parse_centroid_weights)]
    pub centroid_weights: Option<CentroidWeights>,
    /// Per-fold significance level; the aggregated level is twice this.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `homoskedastic` or `hc1`.
    #[arg(long, value_parser = parse_se_mode)]
    pub se_mode: Option<SeMode>,
    /// Convergence rate, or `auto` for a learning-curve estimate.
    #[arg(long)]
    pub xi: Option<Auto<f64>>,
    /// Fold count, or `auto` to derive it from the rate.
    #[arg(long = "k", short = 'k')]
    pub k: Option<Auto<usize>>,
    /// Upper limit on the fold count.
    #[arg(long)]
    pub max_folds: Option<usize>,
    /// Widen fold intervals by the rate-implied ratio.
    #[arg(long)]
    pub adjust_ci: bool,
    /// Seed for folds, models and simulation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    /// Simulated sample size.
    #[arg(long)]
    pub m: Option<usize>,
    /// Simulation coefficients `b1,b2,b3,b4`.
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    /// Simulation noise sd as a fraction of the signal sd.
    #[arg(long)]
    pub noise_ratio: Option<f64>,
    /// Comma-separated sample sizes for sweeps and learning curves.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Repetitions per size.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Held-out rows per learning-curve draw.
    #[arg(long)]
    pub curve_test_size: Option<usize>,
    /// Polynomial degree of fitted interaction curves.
    #[arg(long)]
    pub curve_degree: Option<usize>,
}

fn parse_se_mode(s: &str) -> Result<SeMode, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown se mode `{s}`"))
}

fn parse_centroid_weights(s: &str) -> Result<CentroidWeights, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown centroid weights `{s}`"))
}

fn parse_model(s: &str) -> Result<ModelSpec, Error> {
    if s.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(s)?);
    }
    let kind = match s {
        "linear" => ModelKind::Linear,
        "forest" => ModelKind::Forest,
        "kernel" => ModelKind::Kernel,
        "network" => ModelKind::Network,
        other => return Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
    };
    Ok(ModelSpec::default_for(kind))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// The config file (if any) with every given flag applied over it.
    pub fn resolve(o: &Overrides) -> Result<Self, Error> {
        let mut c = match &o.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &o.input {
            c.input = v.clone();
        }
        if let Some(v) = &o.target {
            c.target = v.clone();
        }
        if let Some(v) = &o.treatment {
            c.treatment = Some(v.clone());
        }
        if let Some(v) = &o.model {
            c.model = parse_model(v)?.with_seed(c.seed);
        }
        if let Some(v) = &o.keep {
            c.keep = Some(v.clone());
        }
        if let Some(v) = o.h {
            c.h = v;
        }
        if let Some(v) = o.background {
            c.background = v;
        }
        if let Some(v) = o.centroid_weights {
            c.centroid_weights = v;
        }
        if let Some(v) = o.alpha {
            c.alpha = v;
        }
        if let Some(v) = o.se_mode {
            c.se_mode = v;
        }
        if let Some(v) = o.xi {
            c.xi = Some(v);
        }
        if let Some(v) = o.k {
            c.k = v;
        }
        if let Some(v) = o.max_folds {
            c.max_folds = Some(v);
        }
        c.adjust_ci |= o.adjust_ci;
        if let Some(v) = o.seed {
            c.seed = v;
            c.simulation.seed = v;
        }
        if let Some(v) = &o.output {
            c.output = v.clone();
        }
        if let Some(v) = o.m {
            c.simulation.m = v;
        }
        if let Some(v) = &o.beta {
            c.simulation.beta = v
                .as_slice()
                .try_into()
                .map_err(|_| Error::InvalidArgument(format!("--beta needs 4 values, got {}", v.len())))?;
        }
        if let Some(v) = o.noise_ratio {
            c.simulation.noise_ratio = v;
        }
        if let Some(v) = &o.sizes {
            c.sizes = v.clone();
        }
        if let Some(v) = o.reps {
            c.reps = v;
        }
        if let Some(v) = o.curve_test_size {
            c.curve_test_size = v;
        }
        if let Some(v) = o.curve_degree {
            c.curve_degree = v;
        }
        if c.is_simulation() && c.treatment.is_none() {
            c.treatment = Some("t".into());
        }
        Ok(c)
    }

    pub fn is_simulation(&self) -> bool {
        self.input == "simulate"
    }

    /// Pipeline settings once names are resolved to indices and K is fixed.
    pub fn crossfit(&self, keep: Option<Vec<usize>>, k: usize, xi: Option<f64>) -> CrossFitConfig {
        CrossFitConfig {
            model: self.model.clone(),
            keep,
            h: self.h,
            background: self.background,
            centroid_weights: self.centroid_weights,
            alpha: self.alpha,
            se_mode: self.se_mode,
            k,
            xi,
            adjust_ci: self.adjust_ci,
            seed: self.seed,
            curve_degree: self.curve_degree,
        }
    }
}
