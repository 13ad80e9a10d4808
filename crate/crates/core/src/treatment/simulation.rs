use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::models::{Predict, SampleSource};

/// Column names of simulated data; `t` is the treatment.
pub const SIM_COLUMNS: [&str; 3] = ["t", "x1", "x2"];

/// Randomised experiment `y = b1 t + b2 t x1 + b3 x1 x2 + b4 + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub m: usize,
    pub beta: [f64; 4],
    /// Noise standard deviation as a fraction of the signal's.
    pub noise_ratio: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            m: 10_000,
            beta: [1.0, 1.0, 1.0, 0.0],
            noise_ratio: 0.1,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("simulation needs m >= 1"));
        }
        if !(self.noise_ratio >= 0.0 && self.noise_ratio.is_finite()) {
            return Err(Error::invalid("noise_ratio must be finite and non-negative"));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("beta".into()));
        }
        Ok(())
    }

    /// Standard deviation of the noise-free signal, from its analytic moments.
    pub fn signal_sd(&self) -> f64 {
        let [b1, b2, b3, _] = self.beta;
        (b1 * b1 / 4.0 + b2 * b2 / 2.0 + b3 * b3).sqrt()
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_ratio * self.signal_sd()
    }

    /// `E[b1 + b2 x1] = b1`, because `x1` has mean zero.
    pub fn true_ate(&self) -> f64 {
        self.beta[0]
    }

    pub fn surface(&self) -> DgpSurface {
        DgpSurface { beta: self.beta }
    }
}

/// The noise-free response as a model over `(t, x1, x2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSurface {
    pub beta: [f64; 4],
}

impl DgpSurface {
    pub fn eval(&self, row: &[f64]) -> f64 {
        let [b1, b2, b3, b4] = self.beta;
        let (t, x1, x2) = (row[0], row[1], row[2]);
        b1 * t + b2 * t * x1 + b3 * x1 * x2 + b4
    }
}

impl Predict for DgpSurface {
    fn n_features(&self) -> usize {
        3
    }

    fn predict(&self, rows: &Matrix) -> Result<Vec<f64>> {
        if rows.ncols() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                actual: rows.ncols(),
            });
        }
        Ok(rows.rows().map(|r| self.eval(r)).collect())
    }

    fn model_id(&self) -> String {
        format!("dgp-{:?}", self.beta)
    }
}

fn draw(cfg: &SimConfig, m: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let surface = cfg.surface();
    let sd = cfg.noise_sd();
    let noise = Normal::new(0.0, sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut data = Vec::with_capacity(3 * m);
    let mut y = Vec::with_capacity(m);
    for _ in 0..m {
        let t = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let x1: f64 = StandardNormal.sample(rng);
        let x2: f64 = StandardNormal.sample(rng);
        let eps = if sd > 0.0 { noise.sample(rng) } else { 0.0 };
        data.extend([t, x1, x2]);
        y.push(surface.eval(&[t, x1, x2]) + eps);
    }
    let names = SIM_COLUMNS.iter().map(|s| s.to_string()).collect();
    Dataset::new(Matrix::from_row_major(m, 3, data)?, names, y, Some(0))
}

/// Draws `cfg.m` rows; the same config always gives the same data.
pub fn simulate_dgp(cfg: &SimConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    draw(cfg, cfg.m, &mut rng)
}

/// Fresh training and test draws from the simulation, for learning curves.
#[derive(Debug, Clone)]
pub struct DgpSource {
    pub config: SimConfig,
    pub test_size: usize,
}

impl SampleSource for DgpSource {
    fn draw(&self, size: usize, rng: &mut ChaCha8Rng) -> Result<(Dataset, Dataset)> {
        self.config.validate()?;
        if size == 0 || self.test_size == 0 {
            return Err(Error::invalid("sample sizes must be positive"));
        }
        let train = draw(&self.config, size, rng)?;
        let test = draw(&self.config, self.test_size, rng)?;
        Ok((train, test))
    }
}
