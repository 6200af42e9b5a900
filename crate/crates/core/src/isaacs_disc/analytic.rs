//! Two-dimensional grid games with continuous action sets and closed-form
//! best responses.
//!
//! For controls `(a, b)` the drift is `beta = a - b`, each axis has diffusion
//! `d`, and the upwind five-point scheme gives at an interior state
//!
//! `v = sum_n (d + h beta_n^±) v_n / D + h^2 (|b|^2 / 2 + f) / D`,
//! `D = 4 d + h |beta|_1 + h^2 lambda`.
//!
//! MIN's control ranges over the plane with quadratic cost. On each sign
//! pattern of `beta` the one-step value is a convex quadratic over a positive
//! affine function of `b`, whose minimizer solves a scalar quadratic equation.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::game_model::{Action, ActionModel, Game, PolicyPair};

/// MAX's move: stop the game or play a drift control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridMax {
    Stop,
    Play([f64; 2]),
}

impl Action for GridMax {
    fn hash_into(&self, h: &mut DefaultHasher) {
        match self {
            GridMax::Stop => h.write_u8(0),
            GridMax::Play(a) => {
                h.write_u8(1);
                h.write_u64(a[0].to_bits());
                h.write_u64(a[1].to_bits());
            }
        }
    }
}

impl Action for [f64; 2] {
    fn hash_into(&self, h: &mut DefaultHasher) {
        h.write_u64(self[0].to_bits());
        h.write_u64(self[1].to_bits());
    }
}

/// Admissible MAX controls.
#[derive(Debug, Clone, PartialEq)]
pub enum MaxSet {
    /// `|a|_2 <= 1`.
    UnitBall,
    /// Stop and collect `obstacle[x]`, or continue with zero MAX drift.
    StopOrContinue { obstacle: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Nbr {
    State(usize),
    Boundary(f64),
}

/// Initial MAX policy for a [`GridGame`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialMax {
    Zero,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridGame {
    grid: GridSpec,
    h: f64,
    d: f64,
    lambda: f64,
    f: Vec<f64>,
    // +x1, -x1, +x2, -x2
    nbrs: Vec<[Nbr; 4]>,
    max_set: MaxSet,
    initial: InitialMax,
}

const GRAD_ZERO: f64 = 1e-14;
const MAX_REFINE: usize = 12;

impl GridGame {
    /// `f` is the running reward sampled at interior points; `boundary` gives
    /// the Dirichlet data at boundary grid points.
    pub fn new(
        grid: GridSpec,
        diffusion: f64,
        lambda: f64,
        f: Vec<f64>,
        boundary: impl Fn(&[f64]) -> f64,
        max_set: MaxSet,
    ) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::Config("analytic grid games are two-dimensional".into()));
        }
        let n = grid.n_states();
        if f.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: f.len() });
        }
        if !(diffusion > 0.0) || !(lambda >= 0.0) {
            return Err(Error::Config("diffusion must be positive and lambda non-negative".into()));
        }
        if let MaxSet::StopOrContinue { obstacle } = &max_set {
            if obstacle.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: obstacle.len() });
            }
        }
        let nbrs = (0..n)
            .map(|s| {
                let c = grid.coords(s);
                let at = |i: usize, j: usize| match grid.index(&[i, j]) {
                    Some(y) => Nbr::State(y),
                    None => {
                        let p = grid.point(&[i, j]);
                        Nbr::Boundary(boundary(&p[..2]))
                    }
                };
                [at(c[0] + 1, c[1]), at(c[0] - 1, c[1]), at(c[0], c[1] + 1), at(c[0], c[1] - 1)]
            })
            .collect();
        let initial = match max_set {
            MaxSet::UnitBall => InitialMax::Zero,
            MaxSet::StopOrContinue { .. } => InitialMax::Stop,
        };
        Ok(GridGame { grid, h: grid.h(), d: diffusion, lambda, f, nbrs, max_set, initial })
    }

    pub fn with_initial(mut self, initial: InitialMax) -> Self {
        self.initial = initial;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn max_set(&self) -> &MaxSet {
        &self.max_set
    }

    #[inline]
    fn nbr_value(&self, n: Nbr, v: &[f64]) -> f64 {
        match n {
            Nbr::State(y) => v[y],
            Nbr::Boundary(g) => g,
        }
    }

    /// Weights of the four neighbours and the normalizer `D`.
    #[inline]
    fn weights(&self, a: [f64; 2], b: [f64; 2]) -> ([f64; 4], f64) {
        let (h, d) = (self.h, self.d);
        let b1 = a[0] - b[0];
        let b2 = a[1] - b[1];
        let den = 4.0 * d + h * (b1.abs() + b2.abs()) + h * h * self.lambda;
        (
            [
                (d + h * b1.max(0.0)) / den,
                (d + h * (-b1).max(0.0)) / den,
                (d + h * b2.max(0.0)) / den,
                (d + h * (-b2).max(0.0)) / den,
            ],
            den,
        )
    }

    #[inline]
    fn play_value(&self, x: usize, a: [f64; 2], b: [f64; 2], v: &[f64]) -> f64 {
        let (w, den) = self.weights(a, b);
        let nb = &self.nbrs[x];
        let mut s = self.h * self.h * (0.5 * (b[0] * b[0] + b[1] * b[1]) + self.f[x]) / den;
        for k in 0..4 {
            s += w[k] * self.nbr_value(nb[k], v);
        }
        s
    }

    /// Exact minimizer over `b` in the plane for MAX drift `a`.
    pub fn min_play(&self, x: usize, a: [f64; 2], v: &[f64]) -> ([f64; 2], f64) {
        let (h, d) = (self.h, self.d);
        let vx = v[x];
        let nb = &self.nbrs[x];
        let mut u = [0.0; 4];
        for k in 0..4 {
            u[k] = self.nbr_value(nb[k], v) - vx;
        }
        let d0 = 4.0 * d + h * h * self.lambda;
        let n_base = d * (u[0] + u[1] + u[2] + u[3]) + h * h * (self.f[x] - self.lambda * vx);

        let mut best_b = a;
        let mut best = self.play_value(x, a, a, v);
        for s1 in [-1i8, 0, 1] {
            for s2 in [-1i8, 0, 1] {
                if s1 == 0 && s2 == 0 {
                    continue;
                }
                let s = [s1, s2];
                let mut n0 = n_base;
                let (mut q_lin, mut q_sq, mut p_a, mut p_v) = (0.0, 0.0, 0.0, 0.0);
                let mut vt = [0.0; 2];
                let mut k = 0.0;
                for i in 0..2 {
                    match s[i] {
                        0 => n0 += 0.5 * h * h * a[i] * a[i],
                        si => {
                            let si = si as f64;
                            vt[i] = if si > 0.0 { u[2 * i] } else { -u[2 * i + 1] };
                            q_lin += h * a[i] * vt[i];
                            q_sq += vt[i] * vt[i];
                            p_a += si * a[i];
                            p_v += si * vt[i];
                            k += 1.0;
                        }
                    }
                }
                let q = n0 + q_lin - 0.5 * q_sq;
                let p = d0 + h * p_a - p_v;
                let disc = p * p + 2.0 * k * q;
                if !(disc >= 0.0) {
                    continue;
                }
                let sq = disc.sqrt();
                let rho = if p > 0.0 { 2.0 * q / (p + sq) } else { (sq - p) / k };
                let mut b = a;
                for i in 0..2 {
                    if s[i] != 0 {
                        b[i] = (vt[i] - rho * s[i] as f64) / h;
                    }
                }
                if !(b[0].is_finite() && b[1].is_finite()) {
                    continue;
                }
                let val = self.play_value(x, a, b, v);
                if val < best {
                    best = val;
                    best_b = b;
                }
            }
        }
        (best_b, best)
    }

    /// Best unit-ball drift for MAX, with MIN's reply.
    fn max_ball(&self, x: usize, v: &[f64]) -> ([f64; 2], [f64; 2], f64) {
        let nb = &self.nbrs[x];
        let g = [
            (self.nbr_value(nb[0], v) - self.nbr_value(nb[1], v)) * 0.5 / self.h,
            (self.nbr_value(nb[2], v) - self.nbr_value(nb[3], v)) * 0.5 / self.h,
        ];
        let (b0, val0) = self.min_play(x, [0.0, 0.0], v);
        let mut best = ([0.0, 0.0], b0, val0);
        let gn = g[0].hypot(g[1]);
        if gn <= GRAD_ZERO {
            return best;
        }
        let mut a = [g[0] / gn, g[1] / gn];
        for _ in 0..MAX_REFINE {
            let (b, val) = self.min_play(x, a, v);
            if val > best.2 {
                best = (a, b, val);
            }
            let bn = b[0].hypot(b[1]);
            if bn <= GRAD_ZERO {
                break;
            }
            let next = [b[0] / bn, b[1] / bn];
            if (next[0] - a[0]).abs() + (next[1] - a[1]).abs() < 1e-15 {
                break;
            }
            a = next;
        }
        best
    }

    fn obstacle(&self, x: usize) -> Option<f64> {
        match &self.max_set {
            MaxSet::StopOrContinue { obstacle } => Some(obstacle[x]),
            MaxSet::UnitBall => None,
        }
    }
}

impl Game for GridGame {
    type Max = GridMax;
    type Min = [f64; 2];

    fn n_states(&self) -> usize {
        self.grid.n_states()
    }

    fn action_model(&self) -> ActionModel {
        ActionModel::AnalyticImprovement
    }

    fn transition(&self, x: usize, a: &GridMax, b: &[f64; 2], row: &mut Vec<(usize, f64)>) -> Result<f64> {
        self.check_max(x, a)?;
        row.clear();
        match *a {
            GridMax::Stop => Ok(self.obstacle(x).unwrap()),
            GridMax::Play(a) => {
                let (w, den) = self.weights(a, *b);
                let mut r = self.h * self.h * (0.5 * (b[0] * b[0] + b[1] * b[1]) + self.f[x]) / den;
                for (k, n) in self.nbrs[x].iter().enumerate() {
                    match *n {
                        Nbr::State(y) => row.push((y, w[k])),
                        Nbr::Boundary(g) => r += w[k] * g,
                    }
                }
                Ok(r)
            }
        }
    }

    fn one_step(&self, x: usize, a: &GridMax, b: &[f64; 2], v: &[f64]) -> Result<f64> {
        match *a {
            GridMax::Stop => self.obstacle(x).ok_or_else(|| Error::InvalidAction {
                state: x,
                reason: "this game has no stop action".into(),
            }),
            GridMax::Play(a) => Ok(self.play_value(x, a, *b, v)),
        }
    }

    fn best_min(&self, x: usize, a: &GridMax, v: &[f64]) -> Result<([f64; 2], f64)> {
        match *a {
            GridMax::Stop => Ok(([0.0, 0.0], self.one_step(x, a, &[0.0, 0.0], v)?)),
            GridMax::Play(a) => Ok(self.min_play(x, a, v)),
        }
    }

    fn best_max(&self, x: usize, v: &[f64]) -> Result<(GridMax, [f64; 2], f64)> {
        match &self.max_set {
            MaxSet::UnitBall => {
                let (a, b, val) = self.max_ball(x, v);
                Ok((GridMax::Play(a), b, val))
            }
            MaxSet::StopOrContinue { obstacle } => {
                let (b, cont) = self.min_play(x, [0.0, 0.0], v);
                if obstacle[x] > cont {
                    Ok((GridMax::Stop, [0.0, 0.0], obstacle[x]))
                } else {
                    Ok((GridMax::Play([0.0, 0.0]), b, cont))
                }
            }
        }
    }

    fn initial_policy(&self) -> PolicyPair<GridMax, [f64; 2]> {
        let n = self.n_states();
        let a = match self.initial {
            InitialMax::Stop if self.obstacle(0).is_some() => GridMax::Stop,
            _ => GridMax::Play([0.0, 0.0]),
        };
        PolicyPair { alpha: vec![a; n], beta: vec![[0.0, 0.0]; n] }
    }

    fn check_max(&self, x: usize, a: &GridMax) -> Result<()> {
        let bad = |reason: &str| Err(Error::InvalidAction { state: x, reason: reason.into() });
        match (a, &self.max_set) {
            (GridMax::Stop, MaxSet::UnitBall) => bad("this game has no stop action"),
            (GridMax::Play(a), MaxSet::UnitBall) if a[0].hypot(a[1]) > 1.0 + 1e-12 => bad("MAX drift outside the unit ball"),
            (GridMax::Play(a), MaxSet::StopOrContinue { .. }) if a[0] != 0.0 || a[1] != 0.0 => {
                bad("MAX cannot steer in a stopping game")
            }
            (GridMax::Play(a), _) if !(a[0].is_finite() && a[1].is_finite()) => bad("non-finite MAX drift"),
            _ => Ok(()),
        }
    }

    fn check_min(&self, x: usize, _a: &GridMax, b: &[f64; 2]) -> Result<()> {
        if b[0].is_finite() && b[1].is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidAction { state: x, reason: "non-finite MIN drift".into() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_game(m: usize) -> GridGame {
        let g = GridSpec::new(2, m).unwrap();
        GridGame::new(g, 1.0, 0.0, vec![0.0; g.n_states()], |_| 0.0, MaxSet::UnitBall).unwrap()
    }

    #[test]
    fn interior_weights_are_quarters() {
        let game = zero_game(8);
        let x = game.grid().index(&[4, 4]).unwrap();
        let mut row = Vec::new();
        game.transition(x, &GridMax::Play([0.0, 0.0]), &[0.0, 0.0], &mut row).unwrap();
        assert_eq!(row.len(), 4);
        assert!(row.iter().all(|&(_, q)| (q - 0.25).abs() < 1e-15));
    }

    #[test]
    fn discount_factor_with_lambda() {
        let g = GridSpec::new(2, 4).unwrap();
        let game = GridGame::new(g, 1.0, 1.0, vec![0.0; 9], |_| 0.0, MaxSet::UnitBall).unwrap();
        let mut row = Vec::new();
        let a = GridMax::Play([0.3, 0.1]);
        game.transition(4, &a, &[0.3, 0.1], &mut row).unwrap();
        let sum: f64 = row.iter().map(|e| e.1).sum();
        assert!((sum - 1.0 / (1.0 + 0.015625)).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_gives_zero_controls() {
        let game = zero_game(8);
        let v = vec![0.0; game.n_states()];
        let (a, b, val) = game.best_max(10, &v).unwrap();
        assert_eq!(a, GridMax::Play([0.0, 0.0]));
        assert_eq!(b, [0.0, 0.0]);
        assert_eq!(val, 0.0);
    }

    #[test]
    fn stop_action_only_in_stopping_games() {
        let game = zero_game(4);
        assert!(game.check_max(0, &GridMax::Stop).is_err());
        assert!(game.check_max(0, &GridMax::Play([1.0, 0.5])).is_err());
    }
}
