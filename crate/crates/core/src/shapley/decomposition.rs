use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Coalition, Universe};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-row attributions for every coalition up to order `h`, plus the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Wire", try_from = "Wire")]
pub struct ShapleyDecomposition {
    pub(crate) phi0: f64,
    pub(crate) order: usize,
    pub(crate) terms: Vec<Coalition>,
    /// `rows × terms`.
    pub(crate) values: Matrix,
    pub(crate) predictions: Vec<f64>,
    pub(crate) row_ids: Vec<usize>,
    pub(crate) universe: Universe,
    pub(crate) background_id: String,
    pub(crate) background_provenance: String,
    pub(crate) model_id: String,
}

#[derive(Serialize, Deserialize)]
struct Wire {
    phi0: f64,
    order: usize,
    terms: Vec<Vec<usize>>,
    values: Matrix,
    predictions: Vec<f64>,
    row_ids: Vec<usize>,
    universe: Universe,
    background_id: String,
    background_provenance: String,
    model_id: String,
}

impl From<ShapleyDecomposition> for Wire {
    fn from(d: ShapleyDecomposition) -> Wire {
        Wire {
            terms: d.terms.iter().map(|&c| d.universe.key(c)).collect(),
            phi0: d.phi0,
            order: d.order,
            values: d.values,
            predictions: d.predictions,
            row_ids: d.row_ids,
            universe: d.universe,
            background_id: d.background_id,
            background_provenance: d.background_provenance,
            model_id: d.model_id,
        }
    }
}

impl TryFrom<Wire> for ShapleyDecomposition {
    type Error = Error;

    fn try_from(w: Wire) -> Result<Self> {
        let terms = w
            .terms
            .iter()
            .map(|k| w.universe.from_key(k))
            .collect::<Result<Vec<_>>>()?;
        let rows = w.values.nrows();
        if w.values.ncols() != terms.len() || w.predictions.len() != rows || w.row_ids.len() != rows {
            return Err(Error::invalid("decomposition fields disagree in shape"));
        }
        Ok(ShapleyDecomposition {
            phi0: w.phi0,
            order: w.order,
            terms,
            values: w.values,
            predictions: w.predictions,
            row_ids: w.row_ids,
            universe: w.universe,
            background_id: w.background_id,
            background_provenance: w.background_provenance,
            model_id: w.model_id,
        })
    }
}

#[derive(Serialize)]
struct Header<'a> {
    phi0: f64,
    h: usize,
    background: &'a str,
    background_id: &'a str,
    model_id: &'a str,
    terms: Vec<String>,
}

impl ShapleyDecomposition {
    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &[Coalition] {
        &self.terms
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// Model predictions at the explained rows (the grand-coalition values).
    pub fn predictions(&self) -> &[f64] {
        &self.predictions
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn background_id(&self) -> &str {
        &self.background_id
    }

    pub fn background_provenance(&self) -> &str {
        &self.background_provenance
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn term_index(&self, c: Coalition) -> Option<usize> {
        self.terms.iter().position(|&t| t == c)
    }

    /// Attribution of term `c` at each row.
    pub fn term_values(&self, c: Coalition) -> Option<Vec<f64>> {
        self.term_index(c).map(|j| self.values.column(j))
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(|&c| self.universe.label(c)).collect()
    }

    /// Largest `|phi0 + sum of terms - prediction|` over rows.
    pub fn efficiency_gap(&self) -> f64 {
        self.values
            .rows()
            .zip(&self.predictions)
            .map(|(r, p)| (self.phi0 + r.iter().sum::<f64>() - p).abs())
            .fold(0.0, f64::max)
    }

    /// Relabels rows, e.g. with their indices in the source dataset.
    pub fn with_row_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        if ids.len() != self.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows(),
                actual: ids.len(),
            });
        }
        self.row_ids = ids;
        Ok(self)
    }

    /// Long-format CSV with columns `row_id, term, value`.
    pub fn write_long_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["row_id", "term", "value"])?;
        let labels = self.labels();
        for (i, row) in self.values.rows().enumerate() {
            for (label, v) in labels.iter().zip(row) {
                w.write_record([self.row_ids[i].to_string(), label.clone(), v.to_string()])?;
            }
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn header_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Header {
            phi0: self.phi0,
            h: self.order,
            background: &self.background_provenance,
            background_id: &self.background_id,
            model_id: &self.model_id,
            terms: self.labels(),
        })?)
    }

    pub fn write_header(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = File::create(path).map_err(io)?;
        f.write_all(self.header_json()?.as_bytes()).map_err(io)?;
        f.write_all(b"\n").map_err(io)
    }
}
