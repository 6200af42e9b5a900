//! Finite-difference discretization of Isaacs equations and stopping games on
//! uniform grids of the unit cube.
//!
//! Each problem is a [`GridProblem`]: it builds a [`Game`] for any grid, knows
//! its Dirichlet data, and may know its exact solution.

mod analytic;
mod custom;
mod functions;
mod grid;
mod tabular_grid;

use std::f64::consts::PI;

pub use analytic::{GridGame, GridMax, InitialMax, MaxSet};
pub use custom::CustomProblem;
pub use functions::NamedFn;
pub use grid::GridSpec;
pub use tabular_grid::{build_tabular_grid, TabularGridSpec, STOP_ID};

use crate::error::{Error, Result};
use crate::game_model::{Game, GameInstance};

/// A boundary value problem that can be discretized on any [`GridSpec`].
pub trait GridProblem: Sync {
    type G: Game;

    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn build(&self, grid: &GridSpec) -> Result<Self::G>;

    /// Dirichlet data on the boundary of the unit cube.
    fn boundary(&self, x: &[f64]) -> f64;

    /// Closed-form solution at a point, if known.
    fn exact(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// The exact solution at the interior points of `grid`.
    fn exact_solution(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        let d = grid.dim();
        (0..grid.n_states())
            .map(|s| {
                self.exact(&grid.state_point(s)[..d])
                    .ok_or_else(|| Error::NotAvailable(format!("no exact solution for {}", self.name())))
            })
            .collect()
    }

    /// Whether MIN's policy is a continuous field that should be recomputed
    /// from the value rather than copied between grids.
    fn rederive_min(&self) -> bool {
        false
    }

    /// Printable labels of the actions `(a, b)` played at `x`.
    fn labels(&self, game: &Self::G, x: usize, a: &<Self::G as Game>::Max, b: &<Self::G as Game>::Min) -> (String, String);
}

fn grid_labels(a: &GridMax, b: &[f64; 2], vector_max: bool) -> (String, String) {
    let alpha = match a {
        GridMax::Stop => "0".to_string(),
        GridMax::Play(_) if !vector_max => "1".to_string(),
        GridMax::Play(a) => format!("{:.6e},{:.6e}", a[0], a[1]),
    };
    (alpha, format!("{:.6e},{:.6e}", b[0], b[1]))
}

fn tabular_labels(game: &GameInstance, x: usize, a: usize, b: usize) -> (String, String) {
    (game.max_id(x, a).to_string(), game.min_id(x, a, b).to_string())
}

/// `max_{|a| <= 1} min_{b in R^2}` Isaacs equation with
/// `u(x) = sin(x_1) sin(x_2)` as exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsaacsSin {
    pub lambda: f64,
}

impl Default for IsaacsSin {
    fn default() -> Self {
        IsaacsSin { lambda: 0.0 }
    }
}

impl IsaacsSin {
    fn u(x: &[f64]) -> f64 {
        x[0].sin() * x[1].sin()
    }

    /// Running reward making `u` the solution.
    pub fn running_reward(&self, x: &[f64]) -> f64 {
        let u = Self::u(x);
        let g = [x[0].cos() * x[1].sin(), x[0].sin() * x[1].cos()];
        let g2 = g[0] * g[0] + g[1] * g[1];
        -(-2.0 * u + g2.sqrt() - 0.5 * g2 - self.lambda * u)
    }
}

impl GridProblem for IsaacsSin {
    type G = GridGame;

    fn name(&self) -> &str {
        "isaacs-sin"
    }

    fn dim(&self) -> usize {
        2
    }

    fn build(&self, grid: &GridSpec) -> Result<GridGame> {
        build_game_isaacs(self, grid)
    }

    fn boundary(&self, x: &[f64]) -> f64 {
        Self::u(x)
    }

    fn exact(&self, x: &[f64]) -> Option<f64> {
        Some(Self::u(x))
    }

    fn rederive_min(&self) -> bool {
        true
    }

    fn labels(&self, _game: &GridGame, _x: usize, a: &GridMax, b: &[f64; 2]) -> (String, String) {
        grid_labels(a, b, true)
    }
}

fn sampled(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let d = grid.dim();
    (0..grid.n_states()).map(|s| f(&grid.state_point(s)[..d])).collect()
}

pub fn build_game_isaacs(problem: &IsaacsSin, grid: &GridSpec) -> Result<GridGame> {
    let f = sampled(grid, |x| problem.running_reward(x));
    GridGame::new(*grid, 1.0, problem.lambda, f, |x| problem.boundary(x), MaxSet::UnitBall)
}

/// Optimal stopping game with a free boundary on the parabola
/// `x_2 = (x_1 - 0.5)^2 + 0.1`: MAX stops (collecting 0) or continues, MIN
/// steers with quadratic cost under diffusion `0.5 Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingParabola {
    pub initial: InitialMax,
}

impl Default for StoppingParabola {
    fn default() -> Self {
        StoppingParabola { initial: InitialMax::Stop }
    }
}

impl StoppingParabola {
    /// Signed distance-like coordinate `x_2 - p(x_1)`.
    pub fn level(x: &[f64]) -> f64 {
        x[1] - ((x[0] - 0.5) * (x[0] - 0.5) + 0.1)
    }

    pub fn above(x: &[f64]) -> bool {
        Self::level(x) >= 0.0
    }

    fn u(x: &[f64]) -> f64 {
        let s = Self::level(x);
        if s >= 0.0 {
            s * s * s
        } else {
            0.0
        }
    }

    /// Running reward. The cubic `s^3` enters on both sides of the curve with
    /// opposite signs, so stopping is strictly better below it.
    pub fn running_reward(x: &[f64]) -> f64 {
        let s = Self::level(x);
        let t = x[0] - 0.5;
        let g = [-6.0 * s * s * t, 3.0 * s * s];
        let lap = 24.0 * s * t * t - 6.0 * s * s + 6.0 * s;
        let l = 0.5 * lap - 0.5 * (g[0] * g[0] + g[1] * g[1]);
        if s >= 0.0 {
            -l
        } else {
            l
        }
    }
}

impl GridProblem for StoppingParabola {
    type G = GridGame;

    fn name(&self) -> &str {
        "stopping-parabola"
    }

    fn dim(&self) -> usize {
        2
    }

    fn build(&self, grid: &GridSpec) -> Result<GridGame> {
        build_game_stopping(self, grid)
    }

    fn boundary(&self, x: &[f64]) -> f64 {
        Self::u(x)
    }

    fn exact(&self, x: &[f64]) -> Option<f64> {
        Some(Self::u(x))
    }

    fn rederive_min(&self) -> bool {
        true
    }

    fn labels(&self, _game: &GridGame, _x: usize, a: &GridMax, b: &[f64; 2]) -> (String, String) {
        grid_labels(a, b, false)
    }
}

pub fn build_game_stopping(problem: &StoppingParabola, grid: &GridSpec) -> Result<GridGame> {
    let f = sampled(grid, StoppingParabola::running_reward);
    let obstacle = vec![0.0; grid.n_states()];
    Ok(GridGame::new(*grid, 0.5, 0.0, f, StoppingParabola::u, MaxSet::StopOrContinue { obstacle })?
        .with_initial(problem.initial))
}

/// One-dimensional game where both players may stop: MAX collects `-ψ̄`,
/// MIN pays `ψ̄`, and continuing earns `0.5 π^2 cos(π x)` under `0.5 d²/dx²`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleStop;

impl DoubleStop {
    /// Stopping level `ψ̄ = (2 cos(0.09π) - 0.82π sin(0.09π)) / 2`.
    pub fn psi_bar() -> f64 {
        (2.0 * (0.09 * PI).cos() + PI * (0.18 - 1.0) * (0.09 * PI).sin()) / 2.0
    }

    pub fn exact_at(x: f64) -> f64 {
        let p = Self::psi_bar();
        let s = (0.09 * PI).sin();
        if x < 0.09 {
            p
        } else if x > 0.91 {
            -p
        } else {
            let c = p - (0.09 * PI).cos() - 0.09 * PI * s;
            (PI * x).cos() + PI * s * x + c
        }
    }
}

impl GridProblem for DoubleStop {
    type G = GameInstance;

    fn name(&self) -> &str {
        "double-stop"
    }

    fn dim(&self) -> usize {
        1
    }

    fn build(&self, grid: &GridSpec) -> Result<GameInstance> {
        build_game_double_stop(self, grid)
    }

    fn boundary(&self, x: &[f64]) -> f64 {
        Self::exact_at(x[0])
    }

    fn exact(&self, x: &[f64]) -> Option<f64> {
        Some(Self::exact_at(x[0]))
    }

    fn labels(&self, game: &GameInstance, x: usize, a: &usize, b: &usize) -> (String, String) {
        tabular_labels(game, x, *a, *b)
    }
}

/// Per state MAX plays `[continue, stop]` and MIN `[continue, stop]`, with
/// ids 1 for continue and [`STOP_ID`] for stop.
pub fn build_game_double_stop(problem: &DoubleStop, grid: &GridSpec) -> Result<GameInstance> {
    if grid.dim() != 1 {
        return Err(Error::UnsupportedScheme(format!("double-stop game is one-dimensional, got dim {}", grid.dim())));
    }
    let p = DoubleStop::psi_bar();
    let reward = |x: &[f64]| 0.5 * PI * PI * (PI * x[0]).cos();
    let boundary = |x: &[f64]| problem.boundary(x);
    let max_stop = move |_: &[f64]| -p;
    let min_stop = move |_: &[f64]| p;
    build_tabular_grid(&TabularGridSpec {
        grid: *grid,
        diffusion: 0.5,
        lambda: 0.0,
        max_drifts: &[vec![0.0]],
        min_drifts: &[vec![0.0]],
        min_cost: 0.0,
        reward: &reward,
        boundary: &boundary,
        max_stop: Some(&max_stop),
        min_stop: Some(&min_stop),
    })
}

impl GridProblem for CustomProblem {
    type G = GameInstance;

    fn name(&self) -> &str {
        "custom"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn build(&self, grid: &GridSpec) -> Result<GameInstance> {
        CustomProblem::build(self, grid)
    }

    fn boundary(&self, x: &[f64]) -> f64 {
        self.boundary.eval(x)
    }

    fn exact(&self, x: &[f64]) -> Option<f64> {
        self.exact.as_ref().map(|f| f.eval(x))
    }

    fn labels(&self, game: &GameInstance, x: usize, a: &usize, b: &usize) -> (String, String) {
        tabular_labels(game, x, *a, *b)
    }
}

/// Selector over the built-in problems and user configs.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    IsaacsSin(IsaacsSin),
    StoppingParabola(StoppingParabola),
    DoubleStop(DoubleStop),
    Custom(Box<CustomProblem>),
}

impl ProblemSpec {
    pub fn name(&self) -> &str {
        match self {
            ProblemSpec::IsaacsSin(p) => p.name(),
            ProblemSpec::StoppingParabola(p) => p.name(),
            ProblemSpec::DoubleStop(p) => p.name(),
            ProblemSpec::Custom(p) => GridProblem::name(p.as_ref()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProblemSpec::IsaacsSin(_) | ProblemSpec::StoppingParabola(_) => 2,
            ProblemSpec::DoubleStop(_) => 1,
            ProblemSpec::Custom(p) => p.dim,
        }
    }
}

/// Exact solution of `problem` on `grid`; custom problems without an `exact`
/// entry give [`Error::NotAvailable`].
pub fn exact_solution(problem: &ProblemSpec, grid: &GridSpec) -> Result<Vec<f64>> {
    match problem {
        ProblemSpec::IsaacsSin(p) => p.exact_solution(grid),
        ProblemSpec::StoppingParabola(p) => p.exact_solution(grid),
        ProblemSpec::DoubleStop(p) => p.exact_solution(grid),
        ProblemSpec::Custom(p) => p.exact_solution(grid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::{bellman, norm_inf};
    use crate::policy_iteration::{solve_game, PiConfig};

    #[test]
    fn exact_values() {
        assert!((IsaacsSin::u(&[0.5, 0.5]) - 0.229_848_847_065_930_14).abs() < 1e-14);
        assert_eq!(StoppingParabola::u(&[0.5, 0.05]), 0.0);
        assert!((DoubleStop::psi_bar() - 0.601).abs() < 1e-3);
        assert_eq!(DoubleStop::exact_at(0.05), DoubleStop::psi_bar());
        // continuous at both switch points
        assert!((DoubleStop::exact_at(0.09 + 1e-12) - DoubleStop::psi_bar()).abs() < 1e-9);
        assert!((DoubleStop::exact_at(0.91 - 1e-12) + DoubleStop::psi_bar()).abs() < 1e-9);
    }

    #[test]
    fn custom_without_exact_is_not_available() {
        let p = CustomProblem::from_toml_str(
            "dim = 1\nmax_drifts = [[0.0]]\nmin_drifts = [[0.0]]\nrunning_reward = { kind = \"zero\" }\nboundary = { kind = \"zero\" }\n",
        )
        .unwrap();
        let g = GridSpec::new(1, 4).unwrap();
        assert!(matches!(exact_solution(&ProblemSpec::Custom(Box::new(p)), &g), Err(Error::NotAvailable(_))));
    }

    #[test]
    fn isaacs_reward_makes_u_nearly_a_fixed_point() {
        // the scheme is first order, so F(u) - u = O(h^3) after the h^2 scaling
        let p = IsaacsSin::default();
        let mut last = f64::INFINITY;
        for m in [16, 32, 64] {
            let grid = GridSpec::new(2, m).unwrap();
            let game = p.build(&grid).unwrap();
            let u = p.exact_solution(&grid).unwrap();
            let fu = bellman(&game, &u).unwrap();
            let r = norm_inf(&fu.iter().zip(&u).map(|(a, b)| a - b).collect::<Vec<_>>()) * (m * m) as f64;
            assert!(r < last);
            last = r;
        }
        assert!(last < 0.1);
    }

    #[test]
    fn boundary_rows_sum_below_one() {
        let p = IsaacsSin::default();
        let grid = GridSpec::new(2, 8).unwrap();
        let game = p.build(&grid).unwrap();
        let mut row = Vec::new();
        game.transition(0, &GridMax::Play([0.0, 0.0]), &[0.0, 0.0], &mut row).unwrap();
        let s: f64 = row.iter().map(|e| e.1).sum();
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stopping_selects_stop_below_everything() {
        let grid = GridSpec::new(2, 8).unwrap();
        let game = StoppingParabola::default().build(&grid).unwrap();
        let v = vec![-1.0; grid.n_states()];
        let (a, _, val) = game.best_max(10, &v).unwrap();
        assert_eq!((a, val), (GridMax::Stop, 0.0));
    }

    #[test]
    fn hopeless_obstacle_reduces_to_continuation() {
        let grid = GridSpec::new(2, 16).unwrap();
        let n = grid.n_states();
        let f = sampled(&grid, StoppingParabola::running_reward);
        let stop = GridGame::new(grid, 0.5, 0.0, f.clone(), StoppingParabola::u, MaxSet::StopOrContinue {
            obstacle: vec![-1e30; n],
        })
        .unwrap()
        .with_initial(InitialMax::Zero);
        let cfg = PiConfig::with_epsilon(1e-12);
        let s1 = solve_game(&stop, stop.initial_policy(), vec![0.0; n], &cfg, None).unwrap();
        assert!(s1.policy.alpha.iter().all(|a| *a == GridMax::Play([0.0, 0.0])));
        let (vi, _) = crate::game_model::value_iteration(&stop, &s1.v, 1e-13, 100).unwrap();
        assert!(norm_inf(&s1.v.iter().zip(&vi).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-10);
    }

    #[test]
    fn double_stop_layout() {
        let grid = GridSpec::new(1, 8).unwrap();
        let game = DoubleStop.build(&grid).unwrap();
        assert_eq!(game.n_max(3), 2);
        assert_eq!((game.max_id(3, 0), game.max_id(3, 1)), (1, STOP_ID));
        assert_eq!(game.n_min(3, 0), 2);
        assert_eq!(game.n_min(3, 1), 1);
        let (r, cols, vals) = game.row(3, 0, 0);
        assert_eq!(cols, &[2, 4]);
        assert_eq!(vals, &[0.5, 0.5]);
        let x = grid.state_point(3)[0];
        assert!((r - 0.5 * PI * PI * (PI * x).cos() / 64.0).abs() < 1e-15);
        assert_eq!(game.row(3, 0, 1).0, DoubleStop::psi_bar());
        assert_eq!(game.row(3, 1, 0).0, -DoubleStop::psi_bar());
        assert!(build_game_double_stop(&DoubleStop, &GridSpec::new(2, 8).unwrap()).is_err());
    }
}
