//! Coalition values and the attributions derived from them.

use rayon::prelude::*;

use super::{Coalition, ShapleyDecomposition, Universe, MAX_PLAYERS};
use crate::data::BackgroundSet;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::models::Predict;

/// Largest hybrid batch handed to a single `predict` call.
const MAX_BATCH_ROWS: usize = 65_536;

/// Enumeration caps on the number of players.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub order1: usize,
    pub higher: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { order1: 20, higher: 12 }
    }
}

fn check_inputs(model: &dyn Predict, rows: &Matrix, background: &BackgroundSet, universe: &Universe) -> Result<()> {
    let n = model.n_features();
    for actual in [rows.ncols(), background.n_features(), universe.n_features()] {
        if actual != n {
            return Err(Error::DimensionMismatch { expected: n, actual });
        }
    }
    if background.is_empty() {
        return Err(Error::Empty("background".into()));
    }
    Ok(())
}

fn weighted(pred: &[f64], weights: &[f64]) -> f64 {
    pred.iter().zip(weights).map(|(p, w)| p * w).sum()
}

/// Background-weighted mean prediction on rows that take the coalition's
/// features from `row` and every other feature from a background row.
pub fn conditional_value(
    model: &dyn Predict,
    row: &[f64],
    coalition: Coalition,
    universe: &Universe,
    background: &BackgroundSet,
) -> Result<f64> {
    let single = Matrix::from_row_major(1, row.len(), row.to_vec())?;
    check_inputs(model, &single, background, universe)?;
    universe.check(coalition)?;
    let keep = universe.feature_mask(coalition);
    let mut hybrid = background.rows().clone();
    for b in 0..hybrid.nrows() {
        let r = hybrid.row_mut(b);
        for (k, kept) in keep.iter().enumerate() {
            if *kept {
                r[k] = row[k];
            }
        }
    }
    Ok(weighted(&model.predict(&hybrid)?, background.weights()))
}

/// `sum_{W subset S} (-1)^{|S|-|W|} v(W u T)`.
pub fn set_derivative(
    model: &dyn Predict,
    row: &[f64],
    s: Coalition,
    t: Coalition,
    universe: &Universe,
    background: &BackgroundSet,
) -> Result<f64> {
    if !s.is_disjoint(t) {
        return Err(Error::Overlap);
    }
    let mut total = 0.0;
    for w in s.subsets() {
        let sign = if (s.len() - w.len()) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * conditional_value(model, row, w.union(t), universe, background)?;
    }
    Ok(total)
}

/// Values `v(S)` of every coalition for each explained row.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    universe: Universe,
    limits: Limits,
    /// `rows × 2^n'`, column index = coalition bits.
    values: Matrix,
    background_id: String,
    background_tag: &'static str,
    model_id: String,
}

impl ValueTable {
    /// Uses the model's closed-form coalition values when it has them.
    pub fn compute(
        model: &dyn Predict,
        rows: &Matrix,
        background: &BackgroundSet,
        universe: &Universe,
    ) -> Result<Self> {
        Self::compute_with(model, rows, background, universe, Limits::default(), true)
    }

    /// Always substitutes hybrid rows explicitly.
    pub fn compute_generic(
        model: &dyn Predict,
        rows: &Matrix,
        background: &BackgroundSet,
        universe: &Universe,
    ) -> Result<Self> {
        Self::compute_with(model, rows, background, universe, Limits::default(), false)
    }

    pub fn compute_with(
        model: &dyn Predict,
        rows: &Matrix,
        background: &BackgroundSet,
        universe: &Universe,
        limits: Limits,
        closed_form: bool,
    ) -> Result<Self> {
        check_inputs(model, rows, background, universe)?;
        let players = universe.len();
        let cap = limits.order1.min(MAX_PLAYERS);
        if players > cap {
            return Err(Error::TooManyPlayers { players, cap });
        }
        let count = 1usize << players;
        let masks: Vec<Vec<bool>> = (0..count as u32)
            .map(|bits| universe.feature_mask(Coalition::from_bits(bits)))
            .collect();

        let fast = if closed_form {
            model.coalition_values(rows, background, &masks).transpose()?
        } else {
            None
        };
        let mut values = match fast {
            Some(v) => v,
            None => generic_values(model, rows, background, &masks)?,
        };
        // The grand coalition substitutes nothing, so use the prediction itself.
        let pred = model.predict(rows)?;
        for (i, p) in pred.iter().enumerate() {
            values.set(i, count - 1, *p);
        }
        Ok(ValueTable {
            universe: universe.clone(),
            limits,
            values,
            background_id: background.id(),
            background_tag: background.provenance().tag(),
            model_id: model.model_id(),
        })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn value(&self, row: usize, c: Coalition) -> f64 {
        self.values.get(row, c.bits() as usize)
    }

    fn set_derivative(&self, row: usize, s: Coalition, t: Coalition) -> f64 {
        s.subsets()
            .map(|w| {
                let sign = if (s.len() - w.len()) % 2 == 0 { 1.0 } else { -1.0 };
                sign * self.value(row, w.union(t))
            })
            .sum()
    }

    fn decomposition(&self, order: usize, terms: Vec<Coalition>, values: Matrix) -> ShapleyDecomposition {
        let full = self.universe.full();
        ShapleyDecomposition {
            phi0: if self.n_rows() > 0 {
                self.value(0, Coalition::EMPTY)
            } else {
                f64::NAN
            },
            order,
            terms,
            values,
            predictions: (0..self.n_rows()).map(|i| self.value(i, full)).collect(),
            row_ids: (0..self.n_rows()).collect(),
            universe: self.universe.clone(),
            background_id: self.background_id.clone(),
            background_provenance: self.background_tag.to_string(),
            model_id: self.model_id.clone(),
        }
    }

    /// Order-1 Shapley values with weights `|S|! (n'-|S|-1)! / n'!`.
    pub fn shapley(&self) -> ShapleyDecomposition {
        let n = self.universe.len();
        let terms = self.universe.terms(1);
        let weights: Vec<f64> = (0..n).map(|s| 1.0 / (n as f64 * binomial(n - 1, s))).collect();
        let full = self.universe.full().bits();
        let mut values = Matrix::zeros(self.n_rows(), n);
        for i in 0..self.n_rows() {
            for k in 0..n {
                let rest = Coalition::from_bits(full & !(1 << k));
                let phi: f64 = rest
                    .subsets()
                    .map(|s| {
                        let with = s.union(Coalition::from_players(&[k]));
                        weights[s.len()] * (self.value(i, with) - self.value(i, s))
                    })
                    .sum();
                values.set(i, k, phi);
            }
        }
        self.decomposition(1, terms, values)
    }

    /// Shapley-Taylor index of order `h`.
    ///
    /// Terms below order `h` are `delta_S v(empty)`; terms of order `h` are
    /// `(h/n') sum_{T subset N\S} delta_S v(T) / C(n'-1, |T|)`.
    pub fn shapley_taylor(&self, h: usize) -> Result<ShapleyDecomposition> {
        let n = self.universe.len();
        if h == 0 || h > n {
            return Err(Error::invalid(format!("order {h} outside 1..={n}")));
        }
        if h >= 2 && n > self.limits.higher {
            return Err(Error::TooManyPlayers {
                players: n,
                cap: self.limits.higher,
            });
        }
        let terms = self.universe.terms(h);
        let full = self.universe.full().bits();
        let mut values = Matrix::zeros(self.n_rows(), terms.len());
        for i in 0..self.n_rows() {
            for (j, &s) in terms.iter().enumerate() {
                let v = if s.len() < h {
                    self.set_derivative(i, s, Coalition::EMPTY)
                } else {
                    let rest = Coalition::from_bits(full & !s.bits());
                    let total: f64 = rest
                        .subsets()
                        .map(|t| self.set_derivative(i, s, t) / binomial(n - 1, t.len()))
                        .sum();
                    h as f64 / n as f64 * total
                };
                values.set(i, j, v);
            }
        }
        Ok(self.decomposition(h, terms, values))
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn generic_values(
    model: &dyn Predict,
    rows: &Matrix,
    background: &BackgroundSet,
    masks: &[Vec<bool>],
) -> Result<Matrix> {
    let p = background.len();
    let n = rows.ncols();
    let per_batch = (MAX_BATCH_ROWS / p).max(1);
    let per_row: Vec<Vec<f64>> = (0..rows.nrows())
        .into_par_iter()
        .map(|i| {
            let row = rows.row(i);
            let mut out = Vec::with_capacity(masks.len());
            for chunk in masks.chunks(per_batch) {
                let mut data = Vec::with_capacity(chunk.len() * p * n);
                for keep in chunk {
                    for b in background.rows().rows() {
                        data.extend((0..n).map(|k| if keep[k] { row[k] } else { b[k] }));
                    }
                }
                let hybrid = Matrix::from_row_major(chunk.len() * p, n, data)?;
                let pred = model.predict(&hybrid)?;
                out.extend(pred.chunks(p).map(|c| weighted(c, background.weights())));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let data = per_row.into_iter().flatten().collect();
    Matrix::from_row_major(rows.nrows(), masks.len(), data)
}

/// Order-1 Shapley values of `model` at each row.
pub fn shapley_values(
    model: &dyn Predict,
    rows: &Matrix,
    background: &BackgroundSet,
    universe: &Universe,
) -> Result<ShapleyDecomposition> {
    Ok(ValueTable::compute(model, rows, background, universe)?.shapley())
}

/// Shapley-Taylor index of order `h` at each row.
pub fn shapley_taylor(
    model: &dyn Predict,
    rows: &Matrix,
    background: &BackgroundSet,
    universe: &Universe,
    h: usize,
) -> Result<ShapleyDecomposition> {
    ValueTable::compute(model, rows, background, universe)?.shapley_taylor(h)
}
