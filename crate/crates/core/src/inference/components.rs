use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::shapley::ShapleyDecomposition;

/// Additive components of the predictions: `prediction = phi0 + sum of columns`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTable {
    pub phi0: f64,
    pub labels: Vec<String>,
    /// `rows × components`.
    pub values: Matrix,
    pub predictions: Vec<f64>,
}

impl ComponentTable {
    pub fn new(phi0: f64, labels: Vec<String>, values: Matrix, predictions: Vec<f64>) -> Result<Self> {
        if labels.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: values.ncols(),
                actual: labels.len(),
            });
        }
        if predictions.len() != values.nrows() {
            return Err(Error::DimensionMismatch {
                expected: values.nrows(),
                actual: predictions.len(),
            });
        }
        Ok(ComponentTable {
            phi0,
            labels,
            values,
            predictions,
        })
    }

    /// Terms labelled with column names, e.g. `t:x1`.
    pub fn from_decomposition(d: &ShapleyDecomposition, names: &[String]) -> Self {
        ComponentTable {
            phi0: d.phi0(),
            labels: d.terms().iter().map(|&c| d.universe().named_label(c, names)).collect(),
            values: d.values().clone(),
            predictions: d.predictions().to_vec(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> ComponentTable {
        ComponentTable {
            phi0: self.phi0,
            labels: self.labels.clone(),
            values: self.values.select_rows(rows),
            predictions: rows.iter().map(|&i| self.predictions[i]).collect(),
        }
    }
}

impl From<&ShapleyDecomposition> for ComponentTable {
    fn from(d: &ShapleyDecomposition) -> Self {
        ComponentTable {
            phi0: d.phi0(),
            labels: d.labels(),
            values: d.values().clone(),
            predictions: d.predictions().to_vec(),
        }
    }
}

/// Sums member terms into components; `grouping` must partition the term indices.
pub fn group_components(
    table: &ComponentTable,
    grouping: &[Vec<usize>],
    labels: Vec<String>,
) -> Result<ComponentTable> {
    let q = table.n_terms();
    let mut seen = vec![false; q];
    for &j in grouping.iter().flatten() {
        if j >= q || seen[j] {
            return Err(Error::invalid("grouping is not a partition of the terms"));
        }
        seen[j] = true;
    }
    if seen.iter().any(|s| !s) || grouping.iter().any(|g| g.is_empty()) {
        return Err(Error::invalid("grouping is not a partition of the terms"));
    }
    let values = Matrix::from_fn(table.n_rows(), grouping.len(), |i, c| {
        grouping[c].iter().map(|&j| table.values.get(i, j)).sum()
    });
    ComponentTable::new(table.phi0, labels, values, table.predictions.clone())
}
