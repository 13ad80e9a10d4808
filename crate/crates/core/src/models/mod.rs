//! Reference learners behind a common prediction contract, plus learning curves.
//!
//! Every learner is deterministic once trained. Randomised learners (forest,
//! network) draw all randomness from a ChaCha8 stream seeded by the caller, so
//! a fixed seed reproduces the fit bit for bit.

mod curve;
mod forest;
mod kernel;
mod linear;
mod network;

pub use curve::{curve_losses, fit_rate, learning_curve, Holdout, LearningCurve, SampleSource};
pub use forest::{fit_forest, ForestModel, ForestParams};
pub use kernel::{fit_kernel, KernelModel, KernelParams};
pub use linear::{fit_linear, LinearModel};
pub use network::{fit_network, NetworkModel, NetworkParams};

use serde::{Deserialize, Serialize};

use crate::data::{BackgroundSet, Dataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Anything that maps `p × n` feature rows to `p` predictions.
pub trait Predict: Sync {
    fn n_features(&self) -> usize;

    /// Predictions for each row. Implementations check the column count.
    fn predict(&self, rows: &Matrix) -> Result<Vec<f64>>;

    /// Identifier recorded on decompositions so mismatched inputs can be detected.
    fn model_id(&self) -> String {
        "model".into()
    }

    /// Background-averaged predictions for hybrid rows, computed in closed form.
    ///
    /// `keep[s][k]` says whether feature `k` of coalition `s` comes from the
    /// explained row (otherwise from each background row). Returns a
    /// `rows × coalitions` matrix, or `None` when the model has no closed form
    /// and the caller must substitute rows explicitly.
    fn coalition_values(
        &self,
        _rows: &Matrix,
        _background: &BackgroundSet,
        _keep: &[Vec<bool>],
    ) -> Option<Result<Matrix>> {
        None
    }
}

pub(crate) fn check_width(expected: usize, rows: &Matrix) -> Result<()> {
    if rows.ncols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: rows.ncols(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Forest,
    Kernel,
    Network,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Forest => "forest",
            ModelKind::Kernel => "kernel",
            ModelKind::Network => "network",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Learner-specific fitted state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "lowercase")]
pub enum Learner {
    Linear(LinearModel),
    Forest(ForestModel),
    Kernel(KernelModel),
    Network(NetworkModel),
}

/// A fitted model of any kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    #[serde(flatten)]
    pub learner: Learner,
    #[serde(rename = "n")]
    pub n_features: usize,
    /// Training RMSE.
    pub base_loss: f64,
    /// Seed the fit was drawn from, for randomised learners.
    pub seed: Option<u64>,
}

impl TrainedModel {
    pub(crate) fn new(learner: Learner, ds: &Dataset, seed: Option<u64>) -> Result<Self> {
        let mut model = TrainedModel {
            learner,
            n_features: ds.n_features(),
            base_loss: 0.0,
            seed,
        };
        let pred = model.predict(ds.features())?;
        model.base_loss = rmse(&pred, ds.target());
        Ok(model)
    }

    pub fn kind(&self) -> ModelKind {
        match self.learner {
            Learner::Linear(_) => ModelKind::Linear,
            Learner::Forest(_) => ModelKind::Forest,
            Learner::Kernel(_) => ModelKind::Kernel,
            Learner::Network(_) => ModelKind::Network,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl Predict for TrainedModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict(&self, rows: &Matrix) -> Result<Vec<f64>> {
        check_width(self.n_features, rows)?;
        Ok(match &self.learner {
            Learner::Linear(m) => m.predict_unchecked(rows),
            Learner::Forest(m) => m.predict_unchecked(rows),
            Learner::Kernel(m) => m.predict_unchecked(rows),
            Learner::Network(m) => m.predict_unchecked(rows),
        })
    }

    fn model_id(&self) -> String {
        format!("{}-n{}-{:016x}", self.kind(), self.n_features, self.base_loss.to_bits())
    }

    fn coalition_values(
        &self,
        rows: &Matrix,
        background: &BackgroundSet,
        keep: &[Vec<bool>],
    ) -> Option<Result<Matrix>> {
        match &self.learner {
            Learner::Kernel(m) => Some(m.coalition_values(rows, background, keep)),
            _ => None,
        }
    }
}

/// Learner choice plus hyperparameters; what a run configuration names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Linear,
    Forest(ForestParams),
    Kernel(KernelParams),
    Network(NetworkParams),
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Linear => ModelKind::Linear,
            ModelSpec::Forest(_) => ModelKind::Forest,
            ModelSpec::Kernel(_) => ModelKind::Kernel,
            ModelSpec::Network(_) => ModelKind::Network,
        }
    }

    /// Reasonable hyperparameters for standardised inputs of moderate size.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Linear => ModelSpec::Linear,
            ModelKind::Forest => ModelSpec::Forest(ForestParams::default()),
            ModelKind::Kernel => ModelSpec::Kernel(KernelParams::default()),
            ModelKind::Network => ModelSpec::Network(NetworkParams::default()),
        }
    }

    /// Same spec with its random seed replaced (no-op for deterministic learners).
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            ModelSpec::Forest(p) => ModelSpec::Forest(ForestParams { seed, ..p.clone() }),
            ModelSpec::Network(p) => ModelSpec::Network(NetworkParams { seed, ..p.clone() }),
            other => other.clone(),
        }
    }

    pub fn fit(&self, ds: &Dataset) -> Result<TrainedModel> {
        match self {
            ModelSpec::Linear => fit_linear(ds),
            ModelSpec::Forest(p) => fit_forest(ds, p),
            ModelSpec::Kernel(p) => fit_kernel(ds, p),
            ModelSpec::Network(p) => fit_network(ds, p),
        }
    }
}

pub fn rmse(pred: &[f64], target: &[f64]) -> f64 {
    let n = pred.len().max(1) as f64;
    (pred.iter().zip(target).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / n).sqrt()
}

/// Free-function form of [`Predict::predict`].
pub fn predict(model: &dyn Predict, rows: &Matrix) -> Result<Vec<f64>> {
    model.predict(rows)
}
