//! Lloyd k-means used to summarise a background sample into centroids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BackgroundSet, Provenance};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How centroid weights are set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CentroidWeights {
    /// Proportional to the number of rows assigned to each centroid.
    #[default]
    ClusterSize,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub centroids: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub weights: CentroidWeights,
}

impl KMeansOptions {
    pub fn new(centroids: usize, seed: u64) -> Self {
        KMeansOptions {
            centroids,
            seed,
            max_iter: 100,
            weights: CentroidWeights::ClusterSize,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, ties to the lowest index.
fn nearest(row: &[f64], centers: &Matrix) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.rows().enumerate() {
        let d = sq_dist(row, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Clusters `rows` into `opts.centroids` groups.
///
/// Seeding picks a random first row from the seed, then repeatedly the row
/// farthest from all chosen centres (ties to the lowest row index). Lloyd
/// iterations stop at an assignment fixpoint or after `max_iter` rounds.
/// A cluster that empties keeps its previous centre.
pub fn kmeans_background(rows: &Matrix, opts: KMeansOptions) -> Result<BackgroundSet> {
    let p = rows.nrows();
    let c = opts.centroids;
    if p == 0 {
        return Err(Error::Empty("k-means input has no rows".into()));
    }
    if c == 0 || c > p {
        return Err(Error::invalid(format!("centroid count {c} must be in 1..={p}")));
    }
    if opts.max_iter == 0 {
        return Err(Error::invalid("max_iter must be at least 1"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut chosen = vec![false; p];
    let first = rng.random_range(0..p);
    chosen[first] = true;
    let mut centers = Matrix::zeros(0, rows.ncols());
    centers.push_row(rows.row(first))?;
    let mut min_d: Vec<f64> = rows.rows().map(|r| sq_dist(r, rows.row(first))).collect();
    while centers.nrows() < c {
        let mut pick = None;
        let mut far = -1.0;
        for i in 0..p {
            if !chosen[i] && min_d[i] > far {
                far = min_d[i];
                pick = Some(i);
            }
        }
        let pick = pick.expect("c <= p leaves an unchosen row");
        chosen[pick] = true;
        centers.push_row(rows.row(pick))?;
        for (i, r) in rows.rows().enumerate() {
            min_d[i] = min_d[i].min(sq_dist(r, rows.row(pick)));
        }
    }

    let mut assign: Vec<usize> = rows.rows().map(|r| nearest(r, &centers)).collect();
    for _ in 0..opts.max_iter {
        let mut sums = Matrix::zeros(c, rows.ncols());
        let mut counts = vec![0usize; c];
        for (i, r) in rows.rows().enumerate() {
            counts[assign[i]] += 1;
            for (s, v) in sums.row_mut(assign[i]).iter_mut().zip(r) {
                *s += v;
            }
        }
        for k in 0..c {
            if counts[k] > 0 {
                let n = counts[k] as f64;
                for (dst, s) in centers.row_mut(k).iter_mut().zip(sums.row(k)) {
                    *dst = s / n;
                }
            }
        }
        let next: Vec<usize> = rows.rows().map(|r| nearest(r, &centers)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }

    let weights = match opts.weights {
        CentroidWeights::Uniform => vec![1.0 / c as f64; c],
        CentroidWeights::ClusterSize => {
            let mut counts = vec![0.0; c];
            for &a in &assign {
                counts[a] += 1.0;
            }
            counts.iter().map(|n| n / p as f64).collect()
        }
    };
    BackgroundSet::new(centers, weights, Provenance::Centroids)
}
