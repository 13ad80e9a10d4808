//! Statistical inference on arbitrary regression models through exact Shapley
//! decompositions and the surrogate Shapley regression.
//!
//! The pipeline: fit a learner on cross-fitting folds, decompose its held-out
//! predictions into Shapley or Shapley-Taylor components over a background
//! set, regress the target on those components, and aggregate the per-fold
//! tests with VEIN medians.

pub mod crossfit;
pub mod data;
pub mod error;
pub mod inference;
mod linalg;
pub mod matrix;
pub mod models;
pub mod shapley;
pub mod stats;
pub mod treatment;

pub use data::{BackgroundSet, Dataset, FoldPlan, Provenance};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use models::{ModelKind, ModelSpec, Predict, TrainedModel};
pub use shapley::{Coalition, ShapleyDecomposition, Universe};
