#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use shapreg::data::{BackgroundSet, Dataset, Provenance};
use shapreg::models::{ForestParams, KernelParams, ModelKind, ModelSpec, NetworkParams};
use shapreg::{Matrix, Predict, Result, TrainedModel};

/// A model defined by a closure over one row.
pub struct FnModel<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Predict for FnModel<F> {
    fn n_features(&self) -> usize {
        self.n
    }

    fn predict(&self, rows: &Matrix) -> Result<Vec<f64>> {
        assert_eq!(rows.ncols(), self.n);
        Ok(rows.rows().map(|r| (self.f)(r)).collect())
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_weights(p: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let drift: f64 = 1.0 - w.iter().sum::<f64>();
    w[0] += drift;
    w
}

pub fn background(rows: Matrix, rng: &mut ChaCha8Rng) -> BackgroundSet {
    let w = random_weights(rows.nrows(), rng);
    BackgroundSet::new(rows, w, Provenance::Custom).unwrap()
}

/// Smooth nonlinear target with interactions, for fitting every learner kind.
pub fn nonlinear_dataset(m: usize, n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let x = normal_matrix(m, n, &mut r);
    let y = (0..m)
        .map(|i| {
            let row = x.row(i);
            let mut v = row[0].sin() + 0.5 * row[0] * row[n - 1];
            for (k, xv) in row.iter().enumerate().skip(1) {
                v += xv / (k as f64 + 1.0);
            }
            v + 0.1 * r.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let names = (0..n).map(|k| format!("x{}", k + 1)).collect();
    Dataset::new(x, names, y, None).unwrap()
}

/// Small, fast hyperparameters for each learner kind.
pub fn quick_spec(kind: ModelKind, seed: u64) -> ModelSpec {
    match kind {
        ModelKind::Linear => ModelSpec::Linear,
        ModelKind::Forest => ModelSpec::Forest(ForestParams {
            trees: 15,
            max_depth: 6,
            min_leaf: 3,
            feature_frac: 0.6,
            seed,
            bootstrap: true,
        }),
        ModelKind::Kernel => ModelSpec::Kernel(KernelParams {
            gamma: 0.3,
            lambda: 0.1,
        }),
        ModelKind::Network => ModelSpec::Network(NetworkParams {
            hidden: vec![8, 4],
            epochs: 10,
            step: 5e-3,
            seed,
            batch_size: None,
        }),
    }
}

pub const KINDS: [ModelKind; 4] = [
    ModelKind::Linear,
    ModelKind::Forest,
    ModelKind::Kernel,
    ModelKind::Network,
];

pub fn quick_model(kind: ModelKind, ds: &Dataset, seed: u64) -> TrainedModel {
    quick_spec(kind, seed).fit(ds).unwrap()
}

/// Lanczos log-gamma (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let t = x + 7.5;
    let mut a = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularised incomplete beta by the modified Lentz continued fraction.
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - inc_beta(1.0 - x, b, a);
    }
    let front = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp() / a;
    let tiny = 1e-300;
    let (mut c, mut d) = (1.0, 1.0 - (a + b) * x / (a + 1.0));
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut f = d;
    for i in 1..500 {
        let m = i as f64;
        for step in 0..2 {
            let num = if step == 0 {
                m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m))
            } else {
                -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0))
            };
            d = 1.0 + num * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = 1.0 + num / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            f *= c * d;
        }
        if (c * d - 1.0).abs() < 1e-16 {
            break;
        }
    }
    front * f
}

/// Student-t cdf from the incomplete beta function.
pub fn t_cdf(t: f64, dof: f64) -> f64 {
    let tail = 0.5 * inc_beta(dof / (dof + t * t), dof / 2.0, 0.5);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Student-t quantile by bisection on [`t_cdf`].
pub fn t_ppf(q: f64, dof: f64) -> f64 {
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_cdf(mid, dof) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
