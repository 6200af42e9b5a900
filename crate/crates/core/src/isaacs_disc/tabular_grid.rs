//! Grid games with finite action lists, assembled as [`GameInstance`]s.

use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::game_model::{GameInstance, MaxActionSpec, MinActionSpec};

/// Identifier used for a stop action; drift actions are numbered from 1.
pub const STOP_ID: usize = 0;

/// Finite-action upwind discretization of a controlled diffusion.
///
/// Every axis has diffusion `diffusion`; action `(a, b)` produces drift `a - b`
/// and running reward `f(x) + min_cost * |b|^2 / 2`. Optional stop actions
/// let MAX collect `max_stop(x)` or MIN collect `min_stop(x)`.
pub struct TabularGridSpec<'a> {
    pub grid: GridSpec,
    pub diffusion: f64,
    pub lambda: f64,
    pub max_drifts: &'a [Vec<f64>],
    pub min_drifts: &'a [Vec<f64>],
    pub min_cost: f64,
    pub reward: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub boundary: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub max_stop: Option<&'a (dyn Fn(&[f64]) -> f64 + Sync)>,
    pub min_stop: Option<&'a (dyn Fn(&[f64]) -> f64 + Sync)>,
}

/// Assemble the game. Per state, MAX's list is the drifts in order followed by
/// stop; MIN's list is the drifts followed by stop. After a MAX stop MIN has a
/// single dummy reply.
pub fn build_tabular_grid(spec: &TabularGridSpec) -> Result<GameInstance> {
    let grid = spec.grid;
    let dim = grid.dim();
    let h = grid.h();
    if !(spec.diffusion > 0.0) || !(spec.lambda >= 0.0) {
        return Err(Error::Config("diffusion must be positive and lambda non-negative".into()));
    }
    if spec.max_drifts.is_empty() || spec.min_drifts.is_empty() {
        return Err(Error::Config("each player needs at least one drift".into()));
    }
    for d in spec.max_drifts.iter().chain(spec.min_drifts) {
        if d.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: d.len() });
        }
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("non-finite drift".into()));
        }
    }
    let n = grid.n_states();
    let mut states = Vec::with_capacity(n);
    for s in 0..n {
        let c = grid.coords(s);
        let p = grid.point(&c[..dim]);
        let x = &p[..dim];
        let f = (spec.reward)(x);
        let mut acts = Vec::with_capacity(spec.max_drifts.len() + 1);
        for (ai, a) in spec.max_drifts.iter().enumerate() {
            let mut mins = Vec::with_capacity(spec.min_drifts.len() + 1);
            for (bi, b) in spec.min_drifts.iter().enumerate() {
                let mut den = 2.0 * spec.diffusion * dim as f64 + h * h * spec.lambda;
                for k in 0..dim {
                    den += h * (a[k] - b[k]).abs();
                }
                let b2: f64 = b.iter().map(|t| t * t).sum();
                let mut reward = h * h * (f + 0.5 * spec.min_cost * b2) / den;
                let mut row = Vec::with_capacity(2 * dim);
                for k in 0..dim {
                    let beta = a[k] - b[k];
                    for (dir, w) in [(1isize, beta.max(0.0)), (-1, (-beta).max(0.0))] {
                        let q = (spec.diffusion + h * w) / den;
                        let mut nc = c;
                        nc[k] = (nc[k] as isize + dir) as usize;
                        match grid.index(&nc[..dim]) {
                            Some(y) => row.push((y, q)),
                            None => reward += q * (spec.boundary)(&grid.point(&nc[..dim])[..dim]),
                        }
                    }
                }
                mins.push(MinActionSpec::new(bi + 1, reward, row));
            }
            if let Some(ms) = spec.min_stop {
                mins.push(MinActionSpec::new(STOP_ID, ms(x), Vec::new()));
            }
            acts.push(MaxActionSpec::new(ai + 1, mins));
        }
        if let Some(ms) = spec.max_stop {
            acts.push(MaxActionSpec::single(STOP_ID, MinActionSpec::new(STOP_ID, ms(x), Vec::new())));
        }
        states.push(acts);
    }
    GameInstance::new(n, states)
}
