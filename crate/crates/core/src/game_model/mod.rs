//! Zero-sum discounted stochastic games: the dynamic programming operator,
//! policies, residuals and the value-iteration reference solver.
//!
//! A game is anything implementing [`Game`]. The kernel of a transition is
//! stored already discounted, so every row is substochastic and the operator is
//!
//! `F(v; x) = max_a min_b ( sum_y q(y | x, a, b) v(y) + r(x, a, b) )`.

mod random;
mod tabular;

pub use random::{random_game, RandomGameSpec};
pub use tabular::{GameInstance, MaxActionSpec, MinActionSpec};

use std::collections::hash_map::DefaultHasher;
use std::fmt::Debug;
use std::hash::Hasher;

use rayon::prelude::*;

use crate::amg::{CsrBuilder, CsrMatrix};
use crate::error::{Error, Result};

/// How optimal actions are found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionModel {
    /// Actions are finite lists and optimizers are found by enumeration.
    FiniteEnumeration,
    /// Optimizers come from problem-specific closed-form procedures.
    AnalyticImprovement,
}

/// An action of either player.
pub trait Action: Clone + PartialEq + Debug + Send + Sync {
    /// Feed a bitwise-exact fingerprint of the action to `h`.
    fn hash_into(&self, h: &mut DefaultHasher);
}

impl Action for usize {
    fn hash_into(&self, h: &mut DefaultHasher) {
        h.write_usize(*self);
    }
}

/// A two-player zero-sum game with substochastic (discounted) transitions.
///
/// MAX chooses `a` in `A(x)`, then MIN chooses `b` in `B(x, a)`.
pub trait Game: Sync {
    type Max: Action;
    type Min: Action;

    fn n_states(&self) -> usize;

    fn action_model(&self) -> ActionModel;

    /// Write the kernel row of `(x, a, b)` into `row` (cleared first) and return the reward.
    fn transition(&self, x: usize, a: &Self::Max, b: &Self::Min, row: &mut Vec<(usize, f64)>) -> Result<f64>;

    /// `sum_y q(y | x, a, b) v(y) + r(x, a, b)`.
    fn one_step(&self, x: usize, a: &Self::Max, b: &Self::Min, v: &[f64]) -> Result<f64> {
        let mut row = Vec::new();
        let r = self.transition(x, a, b, &mut row)?;
        Ok(row.iter().map(|&(y, q)| q * v[y]).sum::<f64>() + r)
    }

    /// A minimizer over `B(x, a)` of the one-step value and the minimum.
    fn best_min(&self, x: usize, a: &Self::Max, v: &[f64]) -> Result<(Self::Min, f64)>;

    /// A maximizer of `min_b` one-step value, with MIN's reply and the value.
    fn best_max(&self, x: usize, v: &[f64]) -> Result<(Self::Max, Self::Min, f64)>;

    /// Starting policies for policy iteration.
    fn initial_policy(&self) -> PolicyPair<Self::Max, Self::Min>;

    /// Check that `alpha(x)` is admissible at `x`.
    fn check_max(&self, _x: usize, _a: &Self::Max) -> Result<()> {
        Ok(())
    }

    /// Check that `b` is admissible at `(x, a)`.
    fn check_min(&self, _x: usize, _a: &Self::Max, _b: &Self::Min) -> Result<()> {
        Ok(())
    }
}

/// Pure stationary strategies: `alpha(x)` for MAX and `beta(x)` for MIN's
/// reply to `alpha(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyPair<A, B> {
    pub alpha: Vec<A>,
    pub beta: Vec<B>,
}

impl<A: Action, B: Action> PolicyPair<A, B> {
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for a in &self.alpha {
            a.hash_into(&mut h);
        }
        h.write_u8(0xff);
        for b in &self.beta {
            b.hash_into(&mut h);
        }
        h.finish()
    }

    pub fn validate<G: Game<Max = A, Min = B>>(&self, game: &G) -> Result<()> {
        let n = game.n_states();
        if self.alpha.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.alpha.len() });
        }
        if self.beta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.beta.len() });
        }
        for x in 0..n {
            game.check_max(x, &self.alpha[x])?;
            game.check_min(x, &self.alpha[x], &self.beta[x])?;
        }
        Ok(())
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Root mean square, `sqrt(sum v_i^2 / n)`.
pub fn norm_rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn check_vector(n: usize, v: &[f64]) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.len() });
    }
    if let Some(index) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// `F(v)`.
pub fn bellman<G: Game>(game: &G, v: &[f64]) -> Result<Vec<f64>> {
    check_vector(game.n_states(), v)?;
    (0..game.n_states()).into_par_iter().map(|x| game.best_max(x, v).map(|t| t.2)).collect()
}

/// `F^alpha(v)`: MAX plays `alpha`, MIN still optimizes.
pub fn bellman_fixed_max<G: Game>(game: &G, alpha: &[G::Max], v: &[f64]) -> Result<Vec<f64>> {
    check_vector(game.n_states(), v)?;
    if alpha.len() != game.n_states() {
        return Err(Error::DimensionMismatch { expected: game.n_states(), found: alpha.len() });
    }
    (0..game.n_states())
        .into_par_iter()
        .map(|x| {
            game.check_max(x, &alpha[x])?;
            game.best_min(x, &alpha[x], v).map(|t| t.1)
        })
        .collect()
}

/// `(||F(v) - v||_inf, ||F(v) - v||_rms)`.
pub fn residual<G: Game>(game: &G, v: &[f64]) -> Result<(f64, f64)> {
    let fv = bellman(game, v)?;
    let r: Vec<f64> = fv.iter().zip(v).map(|(a, b)| a - b).collect();
    Ok((norm_inf(&r), norm_rms(&r)))
}

/// `(||v - u||_inf, ||v - u||_rms)`.
pub fn error_norms(v: &[f64], u_exact: &[f64]) -> Result<(f64, f64)> {
    if v.len() != u_exact.len() {
        return Err(Error::DimensionMismatch { expected: u_exact.len(), found: v.len() });
    }
    let e: Vec<f64> = v.iter().zip(u_exact).map(|(a, b)| a - b).collect();
    Ok((norm_inf(&e), norm_rms(&e)))
}

/// `I - M^{alpha beta}` and `r^{alpha beta}`.
pub fn assemble_linear_system<G: Game>(game: &G, policy: &PolicyPair<G::Max, G::Min>) -> Result<(CsrMatrix, Vec<f64>)> {
    let n = game.n_states();
    if policy.alpha.len() != n || policy.beta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: policy.alpha.len().min(policy.beta.len()) });
    }
    let rows: Vec<(Vec<(usize, f64)>, f64)> = (0..n)
        .into_par_iter()
        .map_init(Vec::new, |buf, x| {
            let (a, b) = (&policy.alpha[x], &policy.beta[x]);
            game.check_max(x, a)?;
            game.check_min(x, a, b)?;
            let r = game.transition(x, a, b, buf)?;
            let mut row = Vec::with_capacity(buf.len() + 1);
            row.push((x, 1.0));
            row.extend(buf.iter().map(|&(y, q)| (y, -q)));
            Ok((row, r))
        })
        .collect::<Result<_>>()?;
    let nnz = rows.iter().map(|r| r.0.len()).sum();
    let mut builder = CsrBuilder::with_capacity(n, n, nnz);
    let mut rhs = Vec::with_capacity(n);
    for (mut row, r) in rows {
        builder.push_unsorted_row(&mut row);
        rhs.push(r);
    }
    Ok((builder.finish(), rhs))
}

/// Iterate `v <- F(v)` until the sup-norm update is at most `tol`.
pub fn value_iteration<G: Game>(game: &G, v0: &[f64], tol: f64, max_iters: usize) -> Result<(Vec<f64>, usize)> {
    if !(tol > 0.0) {
        return Err(Error::Config("value iteration tolerance must be positive".into()));
    }
    let mut v = v0.to_vec();
    let mut delta = f64::INFINITY;
    for it in 1..=max_iters {
        let fv = bellman(game, &v)?;
        delta = fv.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = fv;
        if delta <= tol {
            return Ok((v, it));
        }
    }
    Err(Error::NotConverged { what: "value iteration", iterations: max_iters, residual: delta })
}

/// Estimate the spectral radius of `M^{alpha beta}` by 200 steps of power
/// iteration on the nonnegative kernel. Intended as a debug check on instances
/// with fewer than `10^5` states.
pub fn spectral_radius_estimate<G: Game>(game: &G, policy: &PolicyPair<G::Max, G::Min>) -> Result<f64> {
    let n = game.n_states();
    if n >= 100_000 {
        return Err(Error::NotAvailable("spectral radius check is limited to fewer than 1e5 states".into()));
    }
    let (a, _) = assemble_linear_system(game, policy)?;
    // M = I - A
    let mut w = vec![1.0; n];
    let mut rho = 0.0;
    for _ in 0..200 {
        let aw = a.mul_vec(&w);
        let mw: Vec<f64> = w.iter().zip(&aw).map(|(wi, ai)| wi - ai).collect();
        let s = norm_inf(&mw);
        if s == 0.0 {
            return Ok(0.0);
        }
        rho = s / norm_inf(&w);
        w = mw.into_iter().map(|x| x / s).collect();
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_state() -> GameInstance {
        GameInstance::single_state(0.5, 1.0)
    }

    #[test]
    fn single_state_operator() {
        let g = single_state();
        assert_eq!(bellman(&g, &[0.0]).unwrap(), vec![1.0]);
        assert_eq!(bellman(&g, &[2.0]).unwrap(), vec![2.0]);
        assert_eq!(bellman_fixed_max(&g, &[0], &[0.0]).unwrap(), vec![1.0]);
        assert_eq!(residual(&g, &[2.0]).unwrap(), (0.0, 0.0));
        assert_eq!(residual(&g, &[0.0]).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn error_norms_of_shift() {
        let u = vec![0.3, -1.0, 2.0];
        assert_eq!(error_norms(&u, &u).unwrap(), (0.0, 0.0));
        let v: Vec<f64> = u.iter().map(|x| x + 1.0).collect();
        let (ei, er) = error_norms(&v, &u).unwrap();
        assert!((ei - 1.0).abs() < 1e-15 && (er - 1.0).abs() < 1e-15);
        assert!(error_norms(&v[..2], &u).is_err());
    }

    #[test]
    fn dimension_and_finiteness_checked() {
        let g = single_state();
        assert!(matches!(bellman(&g, &[0.0, 1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(bellman(&g, &[f64::NAN]), Err(Error::NonFinite { index: 0 })));
    }

    #[test]
    fn single_state_system() {
        let g = single_state();
        let p = g.initial_policy();
        let (a, r) = assemble_linear_system(&g, &p).unwrap();
        assert_eq!(a.to_dense(), vec![vec![0.5]]);
        assert_eq!(r, vec![1.0]);
    }

    #[test]
    fn absorbing_chain_system() {
        let g = GameInstance::new(
            2,
            vec![
                vec![MaxActionSpec::single(0, MinActionSpec::new(0, 1.0, vec![(1, 0.9)]))],
                vec![MaxActionSpec::single(0, MinActionSpec::new(0, 0.0, vec![(1, 0.9)]))],
            ],
        )
        .unwrap();
        let (a, r) = assemble_linear_system(&g, &g.initial_policy()).unwrap();
        let d = a.to_dense();
        assert!((d[0][0] - 1.0).abs() < 1e-15 && (d[0][1] + 0.9).abs() < 1e-15);
        assert!(d[1][0] == 0.0 && (d[1][1] - 0.1).abs() < 1e-15);
        let v = crate::amg::direct_solve(&a, &r).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && v[1].abs() < 1e-14);
    }

    #[test]
    fn value_iteration_single_state() {
        let (v, _) = value_iteration(&single_state(), &[0.0], 1e-12, 1000).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-11);
        assert!(matches!(
            value_iteration(&single_state(), &[0.0], 1e-12, 3),
            Err(Error::NotConverged { iterations: 3, .. })
        ));
    }

    #[test]
    fn spectral_radius_of_single_state() {
        let g = single_state();
        let rho = spectral_radius_estimate(&g, &g.initial_policy()).unwrap();
        assert!((rho - 0.5).abs() < 1e-12);
    }
}
