//! Exact Shapley values and Shapley-Taylor interaction indices.
//!
//! Players are either single features or one grouped OTHERS pseudo-feature.
//! Coalition values are background averages of predictions on hybrid rows,
//! enumerated once per row into a [`ValueTable`]; every attribution is then a
//! fixed linear combination of table entries.

mod decomposition;
mod oracle;
mod value;

pub use decomposition::ShapleyDecomposition;
pub use oracle::permutation_oracle;
pub use value::{conditional_value, set_derivative, shapley_taylor, shapley_values, Limits, ValueTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard ceiling from the bitmask width.
pub const MAX_PLAYERS: usize = 30;

/// A set of players, stored as a bitmask over player positions in a [`Universe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition(u32);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn from_bits(bits: u32) -> Self {
        Coalition(bits)
    }

    pub fn from_players(players: &[usize]) -> Self {
        Coalition(players.iter().fold(0, |acc, &p| acc | (1 << p)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, player: usize) -> bool {
        self.0 >> player & 1 == 1
    }

    pub fn union(self, other: Coalition) -> Coalition {
        Coalition(self.0 | other.0)
    }

    pub fn is_disjoint(self, other: Coalition) -> bool {
        self.0 & other.0 == 0
    }

    /// Player positions in ascending order.
    pub fn members(self) -> Vec<usize> {
        (0..32).filter(|&p| self.contains(p)).collect()
    }

    /// All subsets of this coalition, including the empty set and itself.
    pub fn subsets(self) -> impl Iterator<Item = Coalition> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur.wrapping_sub(full)) & full)
            };
            Some(Coalition(cur))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    /// A single feature, by 0-based column index.
    Feature(usize),
    /// The grouped complement of the kept features.
    Others(Vec<usize>),
}

/// The players of a decomposition and how they map onto feature columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Universe {
    n_features: usize,
    players: Vec<Player>,
}

impl Universe {
    /// Every feature is its own player.
    pub fn all(n_features: usize) -> Universe {
        Universe {
            n_features,
            players: (0..n_features).map(Player::Feature).collect(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    /// Number of players `n'`.
    pub fn len(&self) -> usize {
        self.players.len()
    }

    pub fn is_empty(&self) -> bool {
        self.players.is_empty()
    }

    pub fn full(&self) -> Coalition {
        Coalition(((1u64 << self.len()) - 1) as u32)
    }

    /// Position of the player holding column `feature` as a singleton.
    pub fn player_of(&self, feature: usize) -> Option<usize> {
        self.players
            .iter()
            .position(|p| matches!(p, Player::Feature(f) if *f == feature))
    }

    pub fn others(&self) -> Option<usize> {
        self.players.iter().position(|p| matches!(p, Player::Others(_)))
    }

    /// Column-level mask: which features come from the explained row.
    pub fn feature_mask(&self, c: Coalition) -> Vec<bool> {
        let mut keep = vec![false; self.n_features];
        for p in c.members() {
            match &self.players[p] {
                Player::Feature(f) => keep[*f] = true,
                Player::Others(fs) => fs.iter().for_each(|&f| keep[f] = true),
            }
        }
        keep
    }

    pub(crate) fn check(&self, c: Coalition) -> Result<()> {
        if c.bits() & !self.full().bits() != 0 {
            return Err(Error::invalid("coalition names players outside the universe"));
        }
        Ok(())
    }

    /// Serialized key: sorted indices, features 1-based and OTHERS as 0.
    pub fn key(&self, c: Coalition) -> Vec<usize> {
        let mut key: Vec<usize> = c
            .members()
            .into_iter()
            .map(|p| match self.players[p] {
                Player::Feature(f) => f + 1,
                Player::Others(_) => 0,
            })
            .collect();
        key.sort_unstable();
        key
    }

    pub fn from_key(&self, key: &[usize]) -> Result<Coalition> {
        key.iter()
            .map(|&k| {
                if k == 0 { self.others() } else { self.player_of(k - 1) }
                    .ok_or_else(|| Error::invalid(format!("key index {k} is not a player")))
            })
            .collect::<Result<Vec<_>>>()
            .map(|ps| Coalition::from_players(&ps))
    }

    /// Compact label such as `1`, `1x3` or `2xothers`, in player order.
    pub fn label(&self, c: Coalition) -> String {
        self.join(c, "x", |p| match p {
            Player::Feature(f) => (f + 1).to_string(),
            Player::Others(_) => "others".into(),
        })
    }

    /// Label built from column names, e.g. `t:x1`.
    pub fn named_label(&self, c: Coalition, names: &[String]) -> String {
        self.join(c, ":", |p| match p {
            Player::Feature(f) => names[*f].clone(),
            Player::Others(_) => "others".into(),
        })
    }

    fn join(&self, c: Coalition, sep: &str, f: impl Fn(&Player) -> String) -> String {
        c.members()
            .into_iter()
            .map(|p| f(&self.players[p]))
            .collect::<Vec<_>>()
            .join(sep)
    }

    /// All nonempty coalitions of size at most `h`, by size then lexicographically.
    pub fn terms(&self, h: usize) -> Vec<Coalition> {
        let n = self.len();
        let mut out = Vec::new();
        for size in 1..=h.min(n) {
            let mut idx: Vec<usize> = (0..size).collect();
            loop {
                out.push(Coalition::from_players(&idx));
                let Some(i) = (0..size).rev().find(|&i| idx[i] != i + n - size) else {
                    break;
                };
                idx[i] += 1;
                for j in i + 1..size {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        }
        out
    }
}

/// Kept features as singletons (ascending) plus one OTHERS player for the rest.
pub fn group_others(n: usize, keep: &[usize]) -> Result<Universe> {
    if keep.is_empty() {
        return Err(Error::invalid("keep set must be nonempty"));
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return Err(Error::invalid("keep set has duplicates"));
    }
    if let Some(&bad) = kept.iter().find(|&&k| k >= n) {
        return Err(Error::invalid(format!("feature {bad} out of range for {n} columns")));
    }
    let rest: Vec<usize> = (0..n).filter(|f| !kept.contains(f)).collect();
    let mut players: Vec<Player> = kept.into_iter().map(Player::Feature).collect();
    if !rest.is_empty() {
        players.push(Player::Others(rest));
    }
    if players.len() > MAX_PLAYERS {
        return Err(Error::TooManyPlayers {
            players: players.len(),
            cap: MAX_PLAYERS,
        });
    }
    Ok(Universe { n_features: n, players })
}
