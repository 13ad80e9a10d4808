use std::collections::HashMap;

use itertools::Itertools;

use super::{conditional_value, Coalition, Universe};
use crate::data::BackgroundSet;
use crate::error::{Error, Result};
use crate::models::Predict;

/// Largest universe the oracle will enumerate (8! orderings).
pub const ORACLE_MAX_PLAYERS: usize = 8;

/// Shapley values as the average marginal contribution over all player orderings.
///
/// Coalition values come straight from [`conditional_value`], memoised per coalition.
pub fn permutation_oracle(
    model: &dyn Predict,
    row: &[f64],
    universe: &Universe,
    background: &BackgroundSet,
) -> Result<Vec<f64>> {
    let n = universe.len();
    if n > ORACLE_MAX_PLAYERS {
        return Err(Error::TooManyPlayers {
            players: n,
            cap: ORACLE_MAX_PLAYERS,
        });
    }
    let mut cache: HashMap<Coalition, f64> = HashMap::new();
    let mut value = |c: Coalition| -> Result<f64> {
        if let Some(v) = cache.get(&c) {
            return Ok(*v);
        }
        let v = conditional_value(model, row, c, universe, background)?;
        cache.insert(c, v);
        Ok(v)
    };
    let mut phi = vec![0.0; n];
    let mut orderings = 0usize;
    for order in (0..n).permutations(n) {
        let mut before = Coalition::EMPTY;
        for &k in &order {
            let after = before.union(Coalition::from_players(&[k]));
            phi[k] += value(after)? - value(before)?;
            before = after;
        }
        orderings += 1;
    }
    Ok(phi.into_iter().map(|v| v / orderings as f64).collect())
}
