use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of `m` rows to `K` cross-fitting folds (ids `1..=K`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    #[serde(rename = "K")]
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

/// Seeded shuffle, then round-robin over the shuffled order.
pub fn make_folds(m: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid(format!("fold count {k} < 2")));
    }
    if k > m {
        return Err(Error::invalid(format!("fold count {k} exceeds {m} rows")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignment = vec![0; m];
    for (pos, &row) in order.iter().enumerate() {
        assignment[row] = pos % k + 1;
    }
    Ok(FoldPlan { k, assignment, seed })
}

impl FoldPlan {
    /// Row indices belonging to fold `id` (1-based).
    pub fn test_rows(&self, id: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == id)
            .map(|(i, _)| i)
            .collect()
    }

    /// Row indices of every other fold.
    pub fn train_rows(&self, id: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != id)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f - 1] += 1;
        }
        sizes
    }
}
