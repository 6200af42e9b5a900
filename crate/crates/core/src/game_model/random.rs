use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GameInstance, MaxActionSpec, MinActionSpec};
use crate::error::{Error, Result};

/// Parameters of a seeded random tabular game.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomGameSpec {
    pub n_states: usize,
    /// Inclusive range of `|A(x)|`.
    pub max_actions: (usize, usize),
    /// Inclusive range of `|B(x, a)|`.
    pub min_actions: (usize, usize),
    /// Every kernel row sums to exactly `mu`.
    pub mu: f64,
    /// Upper bound on successors per row.
    pub max_successors: usize,
}

impl RandomGameSpec {
    pub fn new(n_states: usize, actions: usize, mu: f64) -> Self {
        RandomGameSpec {
            n_states,
            max_actions: (actions, actions),
            min_actions: (actions, actions),
            mu,
            max_successors: 4,
        }
    }
}

/// Random game with rewards uniform in `[-1, 1]`.
pub fn random_game(spec: &RandomGameSpec, seed: u64) -> Result<GameInstance> {
    let RandomGameSpec { n_states, max_actions, min_actions, mu, max_successors } = *spec;
    if n_states == 0 || max_actions.0 == 0 || min_actions.0 == 0 || max_actions.0 > max_actions.1 || min_actions.0 > min_actions.1 {
        return Err(Error::Config("invalid random game dimensions".into()));
    }
    if !(0.0..=1.0).contains(&mu) || max_successors == 0 {
        return Err(Error::Config("random game needs mu in [0, 1] and at least one successor".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(n_states);
    for _ in 0..n_states {
        let na = rng.gen_range(max_actions.0..=max_actions.1);
        let mut acts = Vec::with_capacity(na);
        for a in 0..na {
            let nb = rng.gen_range(min_actions.0..=min_actions.1);
            let mut mins = Vec::with_capacity(nb);
            for b in 0..nb {
                let k = rng.gen_range(1..=max_successors.min(n_states));
                let mut row: Vec<(usize, f64)> =
                    (0..k).map(|_| (rng.gen_range(0..n_states), rng.gen_range(0.05..1.0))).collect();
                let s: f64 = row.iter().map(|e| e.1).sum();
                for e in &mut row {
                    e.1 *= mu / s;
                }
                mins.push(MinActionSpec::new(b, rng.gen_range(-1.0..=1.0), row));
            }
            acts.push(MaxActionSpec::new(a, mins));
        }
        states.push(acts);
    }
    GameInstance::new(n_states, states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_game() {
        let spec = RandomGameSpec::new(10, 3, 0.9);
        assert_eq!(random_game(&spec, 7).unwrap(), random_game(&spec, 7).unwrap());
        assert_ne!(random_game(&spec, 7).unwrap(), random_game(&spec, 8).unwrap());
    }

    #[test]
    fn rows_sum_to_mu() {
        let g = random_game(&RandomGameSpec::new(15, 2, 0.9), 1).unwrap();
        assert!((g.max_row_sum() - 0.9).abs() < 1e-12);
    }
}
