//! Full multilevel policy iteration: solve on a coarse grid, interpolate the
//! value and strategies to the next finer grid, and repeat.

use crate::error::{Error, Result};
use crate::game_model::{Game, PolicyPair};
use crate::isaacs_disc::{GridProblem, GridSpec};
use crate::policy_iteration::{solve_game, PiConfig, SolveReport};

/// Largest number of coarsenings that keeps `m / 2^L >= 4` with exact division.
pub fn default_levels(m: usize) -> usize {
    let mut l = 0;
    let mut mm = m;
    while mm.is_multiple_of(2) && mm / 2 >= 4 {
        mm /= 2;
        l += 1;
    }
    l
}

/// Nested grids from coarsest to finest with their stopping thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStack {
    grids: Vec<GridSpec>,
    thresholds: Vec<f64>,
}

impl LevelStack {
    /// `levels` coarsenings of the `finest_m` grid; level `l` stops at
    /// `c * h_l^2`, the finest at `epsilon`.
    pub fn new(dim: usize, finest_m: usize, levels: usize, c: f64, epsilon: f64) -> Result<Self> {
        if !(c > 0.0) || !(epsilon > 0.0) {
            return Err(Error::Config("FAMG needs c > 0 and epsilon > 0".into()));
        }
        if levels >= usize::BITS as usize || !finest_m.is_multiple_of(1usize << levels) || finest_m >> levels < 2 {
            return Err(Error::Config(format!("m = {finest_m} does not support {levels} coarsenings")));
        }
        let mut grids = Vec::with_capacity(levels + 1);
        let mut thresholds = Vec::with_capacity(levels + 1);
        for l in (0..=levels).rev() {
            let g = GridSpec::new(dim, finest_m >> l)?;
            thresholds.push(if l == 0 { epsilon } else { c * g.h() * g.h() });
            grids.push(g);
        }
        Ok(LevelStack { grids, thresholds })
    }

    /// Grids in coarse-to-fine order.
    pub fn grids(&self) -> &[GridSpec] {
        &self.grids
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.grids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grids.is_empty()
    }
}

fn check_nested(coarse: &GridSpec, fine: &GridSpec) -> Result<()> {
    if coarse.dim() != fine.dim() || fine.m() != 2 * coarse.m() {
        return Err(Error::Config(format!(
            "grids are not nested: coarse m = {} (dim {}), fine m = {} (dim {})",
            coarse.m(),
            coarse.dim(),
            fine.m(),
            fine.dim()
        )));
    }
    Ok(())
}

/// Coarse state that coincides with a fine state, if any.
fn coincident(coarse: &GridSpec, fine: &GridSpec, s: usize) -> Option<usize> {
    let d = fine.dim();
    let c = fine.coords(s);
    if c[..d].iter().all(|k| k % 2 == 0) {
        let mut cc = [0; 3];
        for k in 0..d {
            cc[k] = c[k] / 2;
        }
        coarse.index(&cc[..d])
    } else {
        None
    }
}

/// Copy coincident points, average the coarse points within one coarse step
/// at the others. Boundary points contribute `boundary`.
pub fn interp_value(
    coarse: &GridSpec,
    fine: &GridSpec,
    v_coarse: &[f64],
    boundary: impl Fn(&[f64]) -> f64,
) -> Result<Vec<f64>> {
    check_nested(coarse, fine)?;
    if v_coarse.len() != coarse.n_states() {
        return Err(Error::DimensionMismatch { expected: coarse.n_states(), found: v_coarse.len() });
    }
    let d = fine.dim();
    let mut out = Vec::with_capacity(fine.n_states());
    for s in 0..fine.n_states() {
        let c = fine.coords(s);
        // each odd coordinate has two coarse neighbours at c-1 and c+1
        let odd: Vec<usize> = (0..d).filter(|&k| c[k] % 2 == 1).collect();
        let mut sum = 0.0;
        let count = 1usize << odd.len();
        for mask in 0..count {
            let mut cc = [0; 3];
            cc[..d].copy_from_slice(&c[..d]);
            for (bit, &k) in odd.iter().enumerate() {
                cc[k] = if mask >> bit & 1 == 1 { c[k] + 1 } else { c[k] - 1 };
            }
            let fine_coords = cc;
            for k in 0..d {
                cc[k] /= 2;
            }
            sum += match coarse.index(&cc[..d]) {
                Some(y) => v_coarse[y],
                None => boundary(&fine.point(&fine_coords[..d])[..d]),
            };
        }
        out.push(sum / count as f64);
    }
    Ok(out)
}

/// Copy the coarse strategies at coincident points and improve locally
/// against `v_fine` elsewhere. With `rederive_min`, MIN's reply is recomputed
/// at every point.
pub fn interp_strategy<G: Game>(
    coarse: &GridSpec,
    fine: &GridSpec,
    policy: &PolicyPair<G::Max, G::Min>,
    v_fine: &[f64],
    game_fine: &G,
    rederive_min: bool,
) -> Result<PolicyPair<G::Max, G::Min>> {
    check_nested(coarse, fine)?;
    let n = fine.n_states();
    if game_fine.n_states() != n || v_fine.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v_fine.len().min(game_fine.n_states()) });
    }
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for s in 0..n {
        match coincident(coarse, fine, s) {
            Some(y) => {
                let a = policy.alpha[y].clone();
                game_fine.check_max(s, &a)?;
                let b = if rederive_min {
                    game_fine.best_min(s, &a, v_fine)?.0
                } else {
                    let b = policy.beta[y].clone();
                    game_fine.check_min(s, &a, &b)?;
                    b
                };
                alpha.push(a);
                beta.push(b);
            }
            None => {
                let (a, b, _) = game_fine.best_max(s, v_fine)?;
                alpha.push(a);
                beta.push(b);
            }
        }
    }
    Ok(PolicyPair { alpha, beta })
}

/// Outcome of one level of a FAMG run.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub grid: GridSpec,
    pub epsilon: f64,
    pub report: SolveReport,
}

#[derive(Debug, Clone)]
pub struct FamgSolution<A, B> {
    pub v: Vec<f64>,
    pub policy: PolicyPair<A, B>,
    /// Coarse-to-fine.
    pub levels: Vec<LevelResult>,
}

impl<A, B> FamgSolution<A, B> {
    pub fn finest(&self) -> &LevelResult {
        self.levels.last().expect("at least one level")
    }
}

/// Run AMGPI level by level. `levels` defaults to [`default_levels`]; `cfg`'s
/// epsilon is ignored in favour of the level thresholds and `epsilon`.
/// Errors are tagged with the level index counted from the finest grid.
pub fn famgpi_solve<P: GridProblem>(
    problem: &P,
    finest_m: usize,
    levels: Option<usize>,
    c: f64,
    epsilon: f64,
    cfg: &PiConfig,
) -> Result<FamgSolution<<P::G as Game>::Max, <P::G as Game>::Min>> {
    let levels = levels.unwrap_or_else(|| default_levels(finest_m));
    let stack = LevelStack::new(problem.dim(), finest_m, levels, c, epsilon)?;
    let mut results = Vec::with_capacity(stack.len());
    let mut state: Option<(GridSpec, Vec<f64>, PolicyPair<_, _>)> = None;
    for (i, (grid, &eps)) in stack.grids().iter().zip(stack.thresholds()).enumerate() {
        let level = stack.len() - 1 - i;
        let tag = |e: Error| Error::Level { level, source: Box::new(e) };
        let game = problem.build(grid).map_err(tag)?;
        let (v0, p0) = match state.take() {
            None => (vec![0.0; grid.n_states()], game.initial_policy()),
            Some((cg, cv, cp)) => {
                let v = interp_value(&cg, grid, &cv, |x| problem.boundary(x)).map_err(tag)?;
                let p = interp_strategy(&cg, grid, &cp, &v, &game, problem.rederive_min()).map_err(tag)?;
                (v, p)
            }
        };
        let exact = match problem.exact_solution(grid) {
            Ok(u) => Some(u),
            Err(Error::NotAvailable(_)) => None,
            Err(e) => return Err(tag(e)),
        };
        let mut level_cfg = cfg.clone();
        level_cfg.epsilon = eps;
        let sol = solve_game(&game, p0, v0, &level_cfg, exact.as_deref()).map_err(tag)?;
        results.push(LevelResult { grid: *grid, epsilon: eps, report: sol.report });
        state = Some((*grid, sol.v, sol.policy));
    }
    let (_, v, policy) = state.expect("at least one level");
    Ok(FamgSolution { v, policy, levels: results })
}
