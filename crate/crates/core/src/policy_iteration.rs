//! Nested policy iteration: Howard's algorithm for MIN inside a policy
//! iteration for MAX, with AMG or sparse LU for the policy-evaluation systems.

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;

use crate::amg::{amg_solve_in_place, setup_hierarchy, AmgConfig, SparseLu};
use crate::error::{Error, Result};
use crate::game_model::{assemble_linear_system, norm_inf, norm_rms, ActionModel, Game, PolicyPair};

/// Solver for `(I - M) v = r`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearSolver {
    Amg(AmgConfig),
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiConfig {
    /// Stop once `||F(v) - v||_inf <= epsilon`.
    pub epsilon: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub linear_solver: LinearSolver,
    /// An incumbent action is kept when it is within
    /// `improvement_tolerance * (1 + |value|)` of the optimum.
    pub improvement_tolerance: f64,
}

impl Default for PiConfig {
    fn default() -> Self {
        PiConfig {
            epsilon: 1e-10,
            max_outer: 1000,
            max_inner: 1000,
            linear_solver: LinearSolver::Amg(AmgConfig::default()),
            improvement_tolerance: 1e-12,
        }
    }
}

impl PiConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        PiConfig { epsilon, ..PiConfig::default() }
    }

    pub fn direct(mut self) -> Self {
        self.linear_solver = LinearSolver::Direct;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::Config("iteration limits must be at least 1".into()));
        }
        if !(self.improvement_tolerance >= 0.0) {
            return Err(Error::Config("improvement tolerance must be non-negative".into()));
        }
        if let LinearSolver::Amg(c) = &self.linear_solver {
            c.validate()?;
        }
        Ok(())
    }

    fn slack(&self, value: f64) -> f64 {
        self.improvement_tolerance * (1.0 + value.abs())
    }
}

/// One row per outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub ki: usize,
    /// Number of linear systems solved by the inner loop.
    pub nkj: usize,
    /// AMG cycles per linear system (empty for the direct solver).
    pub amg_iters: Vec<usize>,
    pub res_inf: f64,
    pub res_rms: f64,
    pub err_inf: Option<f64>,
    pub err_rms: Option<f64>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `||F(v) - v||_inf <= epsilon`.
    Residual,
    /// MAX's policy did not change.
    PolicyStable,
    /// `max_outer` reached without meeting either rule.
    MaxOuter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub records: Vec<OuterRecord>,
    pub termination: Termination,
    /// Largest increase between consecutive inner values, divided by `1 + ||v||_inf`.
    pub max_inner_increase: f64,
    /// Largest decrease between consecutive outer values, divided by `1 + ||v||_inf`.
    pub max_outer_decrease: f64,
    /// A policy pair was evaluated twice (only tracked for finite games up to 10^4 states).
    pub repeated_policy: bool,
}

impl SolveReport {
    fn new() -> Self {
        SolveReport {
            records: Vec::new(),
            termination: Termination::MaxOuter,
            max_inner_increase: 0.0,
            max_outer_decrease: 0.0,
            repeated_policy: false,
        }
    }

    pub fn outer_iterations(&self) -> usize {
        self.records.len()
    }

    pub fn nkj(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.nkj).collect()
    }

    pub fn converged(&self) -> bool {
        self.termination != Termination::MaxOuter
    }

    pub fn last(&self) -> Option<&OuterRecord> {
        self.records.last()
    }
}

/// Bookkeeping of one inner loop.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerStats {
    pub nkj: usize,
    pub amg_iters: Vec<usize>,
    /// `||F^alpha(v) - v||_inf` at exit.
    pub residual: f64,
}

struct Tracker {
    seen: Option<HashSet<u64>>,
    repeated: bool,
    max_inner_increase: f64,
}

impl Tracker {
    fn new<G: Game>(game: &G) -> Self {
        let track = game.action_model() == ActionModel::FiniteEnumeration && game.n_states() <= 10_000;
        Tracker { seen: track.then(HashSet::new), repeated: false, max_inner_increase: 0.0 }
    }
}

/// For every state, MIN's best reply to `alpha` at `v`, keeping `beta`
/// where it is optimal up to the tolerance. Also returns `F^alpha(v)`.
pub fn improve_min<G: Game>(
    game: &G,
    alpha: &[G::Max],
    beta: &[G::Min],
    v: &[f64],
    config: &PiConfig,
) -> Result<(Vec<G::Min>, Vec<f64>)> {
    let out: Vec<(G::Min, f64)> = (0..game.n_states())
        .into_par_iter()
        .map(|x| {
            let (b_star, f_star) = game.best_min(x, &alpha[x], v)?;
            let f_inc = game.one_step(x, &alpha[x], &beta[x], v)?;
            if f_inc <= f_star + config.slack(f_inc) {
                Ok((beta[x].clone(), f_inc.min(f_star)))
            } else {
                Ok((b_star, f_star))
            }
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().unzip())
}

/// For every state, MAX's best action at `v`, keeping `alpha` where it is
/// optimal up to the tolerance. Returns the new policy pair (MIN's reply is the
/// best response to the new `alpha` wherever `alpha` changed) and `F(v)`.
pub fn improve_max<G: Game>(
    game: &G,
    policy: &PolicyPair<G::Max, G::Min>,
    v: &[f64],
    config: &PiConfig,
) -> Result<(PolicyPair<G::Max, G::Min>, Vec<f64>)> {
    let out: Vec<(G::Max, G::Min, f64)> = (0..game.n_states())
        .into_par_iter()
        .map(|x| {
            let (a_star, b_star, f_star) = game.best_max(x, v)?;
            let (_, f_inc) = game.best_min(x, &policy.alpha[x], v)?;
            if f_inc >= f_star - config.slack(f_inc) {
                Ok((policy.alpha[x].clone(), policy.beta[x].clone(), f_inc.max(f_star)))
            } else {
                Ok((a_star, b_star, f_star))
            }
        })
        .collect::<Result<_>>()?;
    let mut alpha = Vec::with_capacity(out.len());
    let mut beta = Vec::with_capacity(out.len());
    let mut fv = Vec::with_capacity(out.len());
    for (a, b, f) in out {
        alpha.push(a);
        beta.push(b);
        fv.push(f);
    }
    Ok((PolicyPair { alpha, beta }, fv))
}

fn solve_system<G: Game>(
    game: &G,
    policy: &PolicyPair<G::Max, G::Min>,
    v: &mut [f64],
    config: &PiConfig,
) -> Result<Option<usize>> {
    let (a, r) = assemble_linear_system(game, policy)?;
    match &config.linear_solver {
        LinearSolver::Amg(amg) => {
            let h = setup_hierarchy(&a, amg)?;
            let rep = amg_solve_in_place(&h, &r, v, amg)?;
            Ok(Some(rep.cycles))
        }
        LinearSolver::Direct => {
            let u = SparseLu::factor(&a)?.solve(&r)?;
            v.copy_from_slice(&u);
            Ok(None)
        }
    }
}

// max_x (a - b)_+ / (1 + ||b||_inf)
fn excess(a: &[f64], b: &[f64]) -> f64 {
    let up = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max(x - y));
    up / (1.0 + norm_inf(b))
}

fn inner_loop<G: Game>(
    game: &G,
    policy: &mut PolicyPair<G::Max, G::Min>,
    v: &mut [f64],
    config: &PiConfig,
    outer: usize,
    tracker: &mut Tracker,
) -> Result<InnerStats> {
    let mut amg_iters = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    for j in 1..=config.max_inner {
        if let Some(seen) = tracker.seen.as_mut() {
            if !seen.insert(policy.fingerprint()) {
                tracker.repeated = true;
            }
        }
        let cycles = solve_system(game, policy, v, config)
            .map_err(|e| Error::LinearSolve { outer, inner: j, source: Box::new(e) })?;
        amg_iters.extend(cycles);
        if let Some(p) = &prev {
            tracker.max_inner_increase = tracker.max_inner_increase.max(excess(v, p));
        }
        let (beta, fa) = improve_min(game, &policy.alpha, &policy.beta, v, config)?;
        let res = fa.iter().zip(v.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if res <= config.epsilon || beta == policy.beta {
            return Ok(InnerStats { nkj: j, amg_iters, residual: res });
        }
        policy.beta = beta;
        prev = Some(v.to_vec());
    }
    Err(Error::NotConverged { what: "inner policy iteration", iterations: config.max_inner, residual: f64::NAN })
}

/// Solve the one-player game in which MAX plays `alpha` (Howard's algorithm for MIN).
///
/// `beta` and `v` are warm starts and are overwritten with the result.
pub fn solve_inner<G: Game>(
    game: &G,
    policy: &mut PolicyPair<G::Max, G::Min>,
    v: &mut [f64],
    config: &PiConfig,
) -> Result<InnerStats> {
    config.validate()?;
    policy.validate(game)?;
    check_len(game, v)?;
    let mut tracker = Tracker::new(game);
    inner_loop(game, policy, v, config, 1, &mut tracker)
}

fn check_len<G: Game>(game: &G, v: &[f64]) -> Result<()> {
    if v.len() != game.n_states() {
        return Err(Error::DimensionMismatch { expected: game.n_states(), found: v.len() });
    }
    if let Some(index) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// Result of [`solve_game`].
#[derive(Debug, Clone)]
pub struct Solution<A, B> {
    pub v: Vec<f64>,
    pub policy: PolicyPair<A, B>,
    pub report: SolveReport,
}

/// Policy iteration for both players.
///
/// Each outer iteration solves MIN's problem for the current `alpha` (warm
/// started from the previous value and `beta`), then improves `alpha`. Stops
/// when `||F(v) - v||_inf <= epsilon` or `alpha` is unchanged. When `exact` is
/// given, error norms of `v - exact` are recorded per iteration.
pub fn solve_game<G: Game>(
    game: &G,
    policy0: PolicyPair<G::Max, G::Min>,
    v0: Vec<f64>,
    config: &PiConfig,
    exact: Option<&[f64]>,
) -> Result<Solution<G::Max, G::Min>> {
    config.validate()?;
    policy0.validate(game)?;
    check_len(game, &v0)?;
    if let Some(u) = exact {
        if u.len() != game.n_states() {
            return Err(Error::DimensionMismatch { expected: game.n_states(), found: u.len() });
        }
    }
    let mut policy = policy0;
    let mut v = v0;
    let mut report = SolveReport::new();
    let mut tracker = Tracker::new(game);
    let mut prev_outer: Option<Vec<f64>> = None;

    for ki in 1..=config.max_outer {
        let t0 = Instant::now();
        let stats = inner_loop(game, &mut policy, &mut v, config, ki, &mut tracker)?;
        if let Some(p) = &prev_outer {
            report.max_outer_decrease = report.max_outer_decrease.max(excess(p, &v));
        }
        let (improved, fv) = improve_max(game, &policy, &v, config)?;
        let r: Vec<f64> = fv.iter().zip(&v).map(|(a, b)| a - b).collect();
        let (res_inf, res_rms) = (norm_inf(&r), norm_rms(&r));
        let (err_inf, err_rms) = match exact {
            Some(u) => {
                let e: Vec<f64> = v.iter().zip(u).map(|(a, b)| a - b).collect();
                (Some(norm_inf(&e)), Some(norm_rms(&e)))
            }
            None => (None, None),
        };
        report.records.push(OuterRecord {
            ki,
            nkj: stats.nkj,
            amg_iters: stats.amg_iters,
            res_inf,
            res_rms,
            err_inf,
            err_rms,
            elapsed_seconds: t0.elapsed().as_secs_f64(),
        });
        if res_inf <= config.epsilon {
            report.termination = Termination::Residual;
            break;
        }
        if improved.alpha == policy.alpha {
            report.termination = Termination::PolicyStable;
            break;
        }
        prev_outer = Some(v.clone());
        policy = improved;
    }
    report.max_inner_increase = tracker.max_inner_increase;
    report.repeated_policy = tracker.repeated;
    Ok(Solution { v, policy, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::{random_game, value_iteration, GameInstance, RandomGameSpec};

    #[test]
    fn single_state_one_outer_iteration() {
        let g = GameInstance::single_state(0.5, 1.0);
        let s = solve_game(&g, g.initial_policy(), vec![0.0], &PiConfig::default().direct(), None).unwrap();
        assert!((s.v[0] - 2.0).abs() < 1e-14);
        assert_eq!(s.report.outer_iterations(), 1);
        assert_eq!(s.report.nkj(), vec![1]);
    }

    #[test]
    fn singleton_min_sets_need_one_solve() {
        let spec = RandomGameSpec { min_actions: (1, 1), ..RandomGameSpec::new(12, 1, 0.9) };
        let g = random_game(&spec, 3).unwrap();
        let mut p = g.initial_policy();
        let mut v = vec![0.0; 12];
        let st = solve_inner(&g, &mut p, &mut v, &PiConfig::default().direct()).unwrap();
        assert_eq!(st.nkj, 1);
        assert_eq!(p.beta, vec![0; 12]);
    }

    #[test]
    fn matches_value_iteration_small_game() {
        let g = random_game(&RandomGameSpec::new(20, 3, 0.9), 11).unwrap();
        let s = solve_game(&g, g.initial_policy(), vec![0.0; 20], &PiConfig::default(), None).unwrap();
        let (vi, _) = value_iteration(&g, &[0.0; 20], 1e-12, 10_000).unwrap();
        let d = s.v.iter().zip(&vi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(d < 1e-8, "difference {d}");
        assert!(!s.report.repeated_policy);
        assert!(s.report.max_outer_decrease <= 1e-9 && s.report.max_inner_increase <= 1e-9);
    }

    #[test]
    fn incumbents_kept_at_fixed_point() {
        let g = random_game(&RandomGameSpec::new(15, 3, 0.9), 5).unwrap();
        let cfg = PiConfig::default().direct();
        let s = solve_game(&g, g.initial_policy(), vec![0.0; 15], &cfg, None).unwrap();
        let (p2, _) = improve_max(&g, &s.policy, &s.v, &cfg).unwrap();
        assert_eq!(p2, s.policy);
        let (b2, _) = improve_min(&g, &s.policy.alpha, &s.policy.beta, &s.v, &cfg).unwrap();
        assert_eq!(b2, s.policy.beta);
    }

    #[test]
    fn one_action_min_choice() {
        let g = GameInstance::parse("game 1\nstate 0 1\nmaxact 0 2\nminact 0 3.0 0\nminact 1 2.0 0\n").unwrap();
        let (b, f) = improve_min(&g, &[0], &[0], &[0.0], &PiConfig::default()).unwrap();
        assert_eq!((b, f), (vec![1], vec![2.0]));
    }

    #[test]
    fn bad_config_rejected() {
        let g = GameInstance::single_state(0.5, 1.0);
        let cfg = PiConfig { epsilon: 0.0, ..PiConfig::default() };
        assert!(matches!(solve_game(&g, g.initial_policy(), vec![0.0], &cfg, None), Err(Error::Config(_))));
        let bad = PolicyPair { alpha: vec![1], beta: vec![0] };
        assert!(matches!(
            solve_game(&g, bad, vec![0.0], &PiConfig::default(), None),
            Err(Error::InvalidAction { .. })
        ));
    }
}
