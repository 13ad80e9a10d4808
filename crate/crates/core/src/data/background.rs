use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Where a background set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    TrainAll,
    UntreatedTrain,
    Centroids,
    Custom,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::TrainAll => "train-all",
            Provenance::UntreatedTrain => "untreated-train",
            Provenance::Centroids => "centroids",
            Provenance::Custom => "custom",
        }
    }
}

/// Weighted reference rows over which absent features are integrated out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBackground")]
pub struct BackgroundSet {
    rows: Matrix,
    weights: Vec<f64>,
    provenance: Provenance,
}

#[derive(Deserialize)]
struct RawBackground {
    rows: Matrix,
    weights: Vec<f64>,
    provenance: Provenance,
}

impl TryFrom<RawBackground> for BackgroundSet {
    type Error = Error;

    fn try_from(raw: RawBackground) -> Result<Self> {
        BackgroundSet::new(raw.rows, raw.weights, raw.provenance)
    }
}

impl BackgroundSet {
    pub fn new(rows: Matrix, weights: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if rows.nrows() == 0 {
            return Err(Error::Empty("background has no rows".into()));
        }
        if weights.len() != rows.nrows() {
            return Err(Error::DimensionMismatch {
                expected: rows.nrows(),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("background weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("background weights sum to {total}, not 1")));
        }
        if !rows.is_finite() {
            return Err(Error::NonFinite("background rows".into()));
        }
        Ok(BackgroundSet {
            rows,
            weights,
            provenance,
        })
    }

    pub fn uniform(rows: Matrix, provenance: Provenance) -> Result<Self> {
        let p = rows.nrows();
        if p == 0 {
            return Err(Error::Empty("background has no rows".into()));
        }
        BackgroundSet::new(rows, vec![1.0 / p as f64; p], provenance)
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn n_features(&self) -> usize {
        self.rows.ncols()
    }

    /// Weighted column means.
    pub fn weighted_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.rows.ncols()];
        for (row, w) in self.rows.rows().zip(&self.weights) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += w * v;
            }
        }
        mean
    }

    /// Short identifier used to check two decompositions share a background.
    pub fn id(&self) -> String {
        let mean = self.weighted_mean();
        let checksum: f64 = mean.iter().enumerate().map(|(j, v)| (j + 1) as f64 * v).sum();
        format!("{}:{}:{checksum:.12e}", self.provenance.tag(), self.len())
    }
}

/// All selected training rows with uniform weights.
pub fn train_background(ds: &Dataset, rows: &[usize]) -> Result<BackgroundSet> {
    if rows.is_empty() {
        return Err(Error::Empty("no rows selected for the background".into()));
    }
    BackgroundSet::uniform(ds.features().select_rows(rows), Provenance::TrainAll)
}

/// Untreated rows (`t = 0`) among the selection, uniform weights.
pub fn untreated_background(ds: &Dataset, rows: &[usize]) -> Result<BackgroundSet> {
    let t = ds
        .treatment_index()
        .ok_or_else(|| Error::invalid("dataset has no treatment column"))?;
    let untreated: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&i| ds.features().get(i, t) == 0.0)
        .collect();
    if untreated.is_empty() {
        return Err(Error::NoUntreated);
    }
    BackgroundSet::uniform(ds.features().select_rows(&untreated), Provenance::UntreatedTrain)
}
