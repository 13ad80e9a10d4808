//! Datasets, fold plans, and background sets shared by every stage.

mod background;
mod csv_io;
mod folds;
mod kmeans;

pub use background::{train_background, untreated_background, BackgroundSet, Provenance};
pub use csv_io::{fmt_num, load_csv, write_csv};
pub use folds::{make_folds, FoldPlan};
pub use kmeans::{kmeans_background, CentroidWeights, KMeansOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Feature matrix, target, and an optional binary treatment column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct Dataset {
    features: Matrix,
    names: Vec<String>,
    target: Vec<f64>,
    treatment_index: Option<usize>,
}

#[derive(Deserialize)]
struct RawDataset {
    features: Matrix,
    names: Vec<String>,
    target: Vec<f64>,
    treatment_index: Option<usize>,
}

impl TryFrom<RawDataset> for Dataset {
    type Error = Error;

    fn try_from(raw: RawDataset) -> Result<Self> {
        Dataset::new(raw.features, raw.names, raw.target, raw.treatment_index)
    }
}

impl Dataset {
    pub fn new(features: Matrix, names: Vec<String>, target: Vec<f64>, treatment_index: Option<usize>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        if features.ncols() == 0 {
            return Err(Error::Empty("dataset has no feature columns".into()));
        }
        if names.len() != features.ncols() {
            return Err(Error::DimensionMismatch {
                expected: features.ncols(),
                actual: names.len(),
            });
        }
        if target.len() != features.nrows() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                actual: target.len(),
            });
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("features".into()));
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("target".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        if let Some(t) = treatment_index {
            if t >= features.ncols() {
                return Err(Error::invalid(format!(
                    "treatment index {t} out of range for {} columns",
                    features.ncols()
                )));
            }
            if (0..features.nrows()).any(|i| {
                let v = features.get(i, t);
                v != 0.0 && v != 1.0
            }) {
                return Err(Error::NotBinary(names[t].clone()));
            }
        }
        Ok(Dataset {
            features,
            names,
            target,
            treatment_index,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn treatment_index(&self) -> Option<usize> {
        self.treatment_index
    }

    /// Number of rows `m`.
    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    /// Number of feature columns `n`.
    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Treatment indicator of row `i`, if a treatment column is set.
    pub fn is_treated(&self, i: usize) -> Option<bool> {
        self.treatment_index.map(|t| self.features.get(i, t) == 1.0)
    }

    /// Sub-dataset with the given rows, in order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            names: self.names.clone(),
            target: rows.iter().map(|&i| self.target[i]).collect(),
            treatment_index: self.treatment_index,
        }
    }

    /// Same rows, new target.
    pub fn with_target(&self, target: Vec<f64>) -> Result<Dataset> {
        Dataset::new(self.features.clone(), self.names.clone(), target, self.treatment_index)
    }
}

/// Divides each selected column by its full-sample mean.
pub fn scale_by_mean(ds: &Dataset, columns: &[usize]) -> Result<Dataset> {
    let m = ds.n_rows();
    let mut features = ds.features.clone();
    for &j in columns {
        if j >= ds.n_features() {
            return Err(Error::invalid(format!("column {j} out of range")));
        }
        let col = ds.features.column(j);
        let mean = col.iter().sum::<f64>() / m as f64;
        let mean_abs = col.iter().map(|v| v.abs()).sum::<f64>() / m as f64;
        if mean_abs == 0.0 || mean.abs() <= 1e-12 * mean_abs {
            return Err(Error::ZeroMean { column: j });
        }
        for i in 0..m {
            features.set(i, j, col[i] / mean);
        }
    }
    Dataset::new(features, ds.names.clone(), ds.target.clone(), ds.treatment_index)
}
