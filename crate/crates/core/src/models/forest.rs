//! Bagged CART regression trees.
//!
//! Randomness is consumed per tree from its own ChaCha8 stream (stream id =
//! tree index, key = the forest seed): first `m` bootstrap draws, then one
//! feature subsample per node in depth-first, left-before-right order. Trees
//! are therefore independent of build order and can be grown in parallel.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Learner, TrainedModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of features considered at each split (at least one).
    pub feature_frac: f64,
    pub seed: u64,
    /// Draw a bootstrap sample of size `m` per tree; otherwise use every row.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: 12,
            min_leaf: 5,
            feature_frac: 1.0 / 3.0,
            seed: 0,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub(crate) fn predict_unchecked(&self, rows: &Matrix) -> Vec<f64> {
        let k = self.trees.len() as f64;
        rows.rows()
            .map(|r| self.trees.iter().map(|t| t.predict(r)).sum::<f64>() / k)
            .collect()
    }
}

pub fn fit_forest(ds: &Dataset, params: &ForestParams) -> Result<TrainedModel> {
    if params.trees == 0 {
        return Err(Error::invalid("forest needs at least one tree"));
    }
    if params.min_leaf == 0 {
        return Err(Error::invalid("min_leaf must be at least 1"));
    }
    if !(params.feature_frac > 0.0 && params.feature_frac <= 1.0) {
        return Err(Error::invalid("feature_frac must be in (0, 1]"));
    }
    let n = ds.n_features();
    let per_split = ((params.feature_frac * n as f64 + 1e-9).floor() as usize).clamp(1, n);
    let trees: Vec<Tree> = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            let m = ds.n_rows();
            let sample: Vec<usize> = if params.bootstrap {
                (0..m).map(|_| rng.random_range(0..m)).collect()
            } else {
                (0..m).collect()
            };
            let mut builder = TreeBuilder {
                x: ds.features(),
                y: ds.target(),
                params,
                per_split,
                rng,
                nodes: Vec::new(),
            };
            builder.grow(sample, 0);
            Tree { nodes: builder.nodes }
        })
        .collect();
    TrainedModel::new(Learner::Forest(ForestModel { trees }), ds, Some(params.seed))
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    params: &'a ForestParams,
    per_split: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl TreeBuilder<'_> {
    /// Grows the subtree for `idx` and returns its node index.
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        self.nodes.push(Node::Leaf(mean));
        if depth >= self.params.max_depth || idx.len() < 2 * self.params.min_leaf {
            return at;
        }
        let mut features: Vec<usize> = (0..self.x.ncols()).collect();
        let (chosen, _) = features.partial_shuffle(&mut self.rng, self.per_split);
        let mut chosen = chosen.to_vec();
        chosen.sort_unstable();
        let Some(best) = self.best_split(&idx, &chosen) else {
            return at;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x.get(i, best.feature) <= best.threshold);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        at
    }

    /// Variance-reduction split with midpoint thresholds; ties keep the first candidate.
    fn best_split(&self, idx: &[usize], features: &[usize]) -> Option<Best> {
        let n = idx.len();
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let base = total * total / n as f64;
        let sse: f64 = idx.iter().map(|&i| self.y[i] * self.y[i]).sum::<f64>() - base;
        let min_gain = 1e-12 * sse.abs().max(f64::MIN_POSITIVE);
        let min_leaf = self.params.min_leaf;
        let mut best: Option<Best> = None;
        let mut order = idx.to_vec();
        for &f in features {
            order.sort_by(|&a, &b| self.x.get(a, f).total_cmp(&self.x.get(b, f)).then(a.cmp(&b)));
            let mut left_sum = 0.0;
            for pos in 0..n - 1 {
                left_sum += self.y[order[pos]];
                let nl = pos + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let v = self.x.get(order[pos], f);
                let next = self.x.get(order[pos + 1], f);
                if v == next {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - base;
                if gain > min_gain && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Best {
                        gain,
                        feature: f,
                        threshold: 0.5 * (v + next),
                    });
                }
            }
        }
        best
    }
}
