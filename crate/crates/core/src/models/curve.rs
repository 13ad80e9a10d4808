//! Empirical learning curves and the convergence rate ξ fitted to them.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rmse, ModelSpec, Predict};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub sizes: Vec<usize>,
    /// Held-out RMSE per size, averaged over repetitions.
    pub losses: Vec<f64>,
    pub xi: f64,
    /// Inclusive index span `[start, end]` used for the fit.
    pub fit_range: (usize, usize),
}

/// Produces a training set of the requested size and a held-out test set.
pub trait SampleSource: Sync {
    fn draw(&self, size: usize, rng: &mut ChaCha8Rng) -> Result<(Dataset, Dataset)>;
}

/// Random sub-samples of a fixed dataset; the test set is disjoint from the training rows.
#[derive(Debug, Clone)]
pub struct Holdout<'a> {
    pub data: &'a Dataset,
    pub test_size: usize,
}

impl SampleSource for Holdout<'_> {
    fn draw(&self, size: usize, rng: &mut ChaCha8Rng) -> Result<(Dataset, Dataset)> {
        let m = self.data.n_rows();
        if size + self.test_size > m || self.test_size == 0 {
            return Err(Error::invalid(format!(
                "cannot draw {size} training and {} test rows from {m}",
                self.test_size
            )));
        }
        let idx = sample(rng, m, size + self.test_size).into_vec();
        Ok((self.data.subset(&idx[..size]), self.data.subset(&idx[size..])))
    }
}

/// Fits `log loss = a - xi log size` over the longest strictly decreasing run
/// of losses that ends at the largest size.
pub fn fit_rate(sizes: &[usize], losses: &[f64]) -> Result<LearningCurve> {
    if sizes.len() != losses.len() {
        return Err(Error::DimensionMismatch {
            expected: sizes.len(),
            actual: losses.len(),
        });
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) || sizes.first() == Some(&0) {
        return Err(Error::invalid("sizes must be positive and strictly increasing"));
    }
    if losses.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::invalid("losses must be positive and finite"));
    }
    let Some(end) = sizes.len().checked_sub(1) else {
        return Err(Error::NoDecreasingSection);
    };
    let mut start = end;
    while start > 0 && losses[start - 1] > losses[start] {
        start -= 1;
    }
    if start == end {
        return Err(Error::NoDecreasingSection);
    }
    let xs: Vec<f64> = sizes[start..=end].iter().map(|&s| (s as f64).ln()).collect();
    let ys: Vec<f64> = losses[start..=end].iter().map(|l| l.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(LearningCurve {
        sizes: sizes.to_vec(),
        losses: losses.to_vec(),
        xi: -sxy / sxx,
        fit_range: (start, end),
    })
}

/// Held-out RMSE per size, averaged over `reps` draws.
///
/// Cell `(q, r)` uses ChaCha8 stream `q * reps + r` of `seed` for sampling and
/// model seed `seed + q * reps + r`, so cells are independent and run in parallel.
pub fn curve_losses(
    spec: &ModelSpec,
    source: &dyn SampleSource,
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    let cells: Vec<(usize, usize)> = (0..sizes.len()).flat_map(|q| (0..reps).map(move |r| (q, r))).collect();
    let losses: Vec<f64> = cells
        .par_iter()
        .map(|&(q, r)| {
            let cell = (q * reps + r) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(cell);
            let (train, test) = source.draw(sizes[q], &mut rng)?;
            let model = spec.with_seed(seed.wrapping_add(cell)).fit(&train)?;
            Ok(rmse(&model.predict(test.features())?, test.target()))
        })
        .collect::<Result<_>>()?;
    Ok(losses
        .chunks(reps)
        .map(|c| c.iter().sum::<f64>() / reps as f64)
        .collect())
}

/// [`curve_losses`] followed by [`fit_rate`].
pub fn learning_curve(
    spec: &ModelSpec,
    source: &dyn SampleSource,
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<LearningCurve> {
    let losses = curve_losses(spec, source, sizes, reps, seed)?;
    fit_rate(sizes, &losses).inspect_err(|_| log::warn!("learning curve losses {losses:?} at sizes {sizes:?}"))
}
