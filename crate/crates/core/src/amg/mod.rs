//! Algebraic multigrid for sparse linear systems `A u = f`.
//!
//! Setup follows Ruge–Stüben: strength of connection from negative couplings,
//! a two-pass C/F split, classical interpolation, `R = P^T` and Galerkin coarse
//! operators. The solve phase uses CF-ordered Gauss–Seidel smoothing inside V-
//! or W-cycles and a sparse LU solve on the coarsest level.

pub mod csr;
pub mod lu;
pub mod mtx;
pub mod setup;

pub use csr::{norm2, CsrBuilder, CsrMatrix};
pub use lu::{direct_solve, SparseLu};
pub use mtx::{format_matrix, format_vector, parse_matrix, parse_vector, read_matrix, read_vector, write_matrix};
pub use setup::{build_interpolation, cf_split, galerkin, strength_graph, CfSplit, PointKind, StrengthGraph};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleType {
    V,
    W,
}

impl CycleType {
    /// Number of recursive coarse-grid visits per cycle.
    pub fn gamma(self) -> usize {
        match self {
            CycleType::V => 1,
            CycleType::W => 2,
        }
    }
}

impl std::str::FromStr for CycleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "V" | "v" => Ok(CycleType::V),
            "W" | "w" => Ok(CycleType::W),
            other => Err(Error::Config(format!("unknown cycle type {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmgConfig {
    pub theta: f64,
    pub nu1: usize,
    pub nu2: usize,
    pub cycle: CycleType,
    /// Stop coarsening once a level has at most this many unknowns.
    pub coarsest_size: usize,
    pub max_levels: usize,
    /// Stop coarsening when the coarse level keeps more than this fraction of points.
    pub max_coarse_ratio: f64,
    /// Absolute threshold on the Euclidean residual norm.
    pub tol: f64,
    pub max_cycles: usize,
}

impl Default for AmgConfig {
    fn default() -> Self {
        AmgConfig {
            theta: 0.25,
            nu1: 1,
            nu2: 1,
            cycle: CycleType::W,
            coarsest_size: 40,
            max_levels: 25,
            max_coarse_ratio: 0.9,
            tol: 1e-12,
            max_cycles: 200,
        }
    }
}

impl AmgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if self.nu1 + self.nu2 == 0 {
            return Err(Error::Config("at least one smoothing sweep is required".into()));
        }
        if self.max_levels == 0 || self.coarsest_size == 0 {
            return Err(Error::Config("max_levels and coarsest_size must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("AMG tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Level {
    a: CsrMatrix,
    p: CsrMatrix,
    r: CsrMatrix,
    order: Vec<usize>,
    inv_diag: Vec<f64>,
}

/// Multigrid hierarchy built once per matrix.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Vec<Level>,
    coarsest: CsrMatrix,
    coarse_lu: SparseLu,
}

impl Hierarchy {
    pub fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }

    /// Unknowns per level, finest first.
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.levels.iter().map(|l| l.a.nrows()).collect();
        v.push(self.coarsest.nrows());
        v
    }

    /// Total nonzeros over all levels divided by the nonzeros of the finest level.
    pub fn operator_complexity(&self) -> f64 {
        let fine = self.levels.first().map(|l| l.a.nnz()).unwrap_or(self.coarsest.nnz());
        let total: usize = self.levels.iter().map(|l| l.a.nnz()).sum::<usize>() + self.coarsest.nnz();
        total as f64 / fine.max(1) as f64
    }

    pub fn fine_matrix(&self) -> &CsrMatrix {
        self.levels.first().map(|l| &l.a).unwrap_or(&self.coarsest)
    }

    pub fn dim(&self) -> usize {
        self.fine_matrix().nrows()
    }
}

/// Build the AMG hierarchy for `a`.
pub fn setup_hierarchy(a: &CsrMatrix, config: &AmgConfig) -> Result<Hierarchy> {
    config.validate()?;
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    let mut levels = Vec::new();
    let mut current = a.clone();
    loop {
        let n = current.nrows();
        if n <= config.coarsest_size || levels.len() + 1 >= config.max_levels {
            break;
        }
        let strength = strength_graph(&current, config.theta);
        let split = cf_split(&strength);
        let nc = split.n_coarse();
        if nc == 0 || nc as f64 > config.max_coarse_ratio * n as f64 {
            break;
        }
        let inv_diag = inverse_diagonal(&current)?;
        let p = build_interpolation(&current, &split, &strength)?;
        let r = p.transpose();
        let coarse = setup::galerkin_with_restriction(&current, &p, &r)?;
        let order = split.relaxation_order();
        levels.push(Level { a: current, p, r, order, inv_diag });
        current = coarse;
    }
    let level = levels.len();
    let coarse_lu = SparseLu::factor(&current).map_err(|e| match e {
        Error::Singular { pivot } => Error::SingularCoarseLevel { level, pivot },
        other => other,
    })?;
    Ok(Hierarchy { levels, coarsest: current, coarse_lu })
}

fn inverse_diagonal(a: &CsrMatrix) -> Result<Vec<f64>> {
    a.diagonal()
        .into_iter()
        .enumerate()
        .map(|(row, d)| if d == 0.0 { Err(Error::ZeroDiagonal { row }) } else { Ok(1.0 / d) })
        .collect()
}

/// One Gauss–Seidel sweep visiting the rows in `order`.
pub fn gauss_seidel_ordered(a: &CsrMatrix, u: &mut [f64], f: &[f64], order: &[usize], inv_diag: &[f64]) {
    for &i in order {
        let (cols, vals) = a.row(i);
        let mut s = f[i];
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                s -= v * u[j];
            }
        }
        u[i] = s * inv_diag[i];
    }
}

/// One CF Gauss–Seidel sweep: C-points ascending, then F-points ascending.
pub fn cf_gauss_seidel(a: &CsrMatrix, u: &mut [f64], f: &[f64], split: &CfSplit) -> Result<()> {
    let inv_diag = inverse_diagonal(a)?;
    gauss_seidel_ordered(a, u, f, &split.relaxation_order(), &inv_diag);
    Ok(())
}

fn cycle(h: &Hierarchy, lvl: usize, u: &mut [f64], f: &[f64], config: &AmgConfig) -> Result<()> {
    if lvl == h.levels.len() {
        let x = h.coarse_lu.solve(f)?;
        u.copy_from_slice(&x);
        return Ok(());
    }
    let level = &h.levels[lvl];
    for _ in 0..config.nu1 {
        gauss_seidel_ordered(&level.a, u, f, &level.order, &level.inv_diag);
    }
    let r = level.a.residual(u, f);
    let fc = level.r.mul_vec(&r);
    let mut uc = vec![0.0; fc.len()];
    for _ in 0..config.cycle.gamma() {
        cycle(h, lvl + 1, &mut uc, &fc, config)?;
        if lvl + 1 == h.levels.len() {
            // exact coarse solve: a second visit changes nothing
            break;
        }
    }
    let corr = level.p.mul_vec(&uc);
    for (ui, ci) in u.iter_mut().zip(&corr) {
        *ui += ci;
    }
    for _ in 0..config.nu2 {
        gauss_seidel_ordered(&level.a, u, f, &level.order, &level.inv_diag);
    }
    Ok(())
}

/// Apply a single multigrid cycle to `u` in place.
pub fn mg_cycle(h: &Hierarchy, u: &mut [f64], f: &[f64], config: &AmgConfig) -> Result<()> {
    let n = h.dim();
    if u.len() != n || f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: u.len().min(f.len()) });
    }
    cycle(h, 0, u, f, config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmgSolveReport {
    pub cycles: usize,
    pub residual: f64,
    /// Euclidean residual norm before the first cycle and after every cycle.
    pub history: Vec<f64>,
}

impl AmgSolveReport {
    /// Ratios of successive residual norms.
    pub fn factors(&self) -> Vec<f64> {
        self.history.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect()
    }
}

/// Cycle from `u` until `||f - A u||_2 < tol`.
pub fn amg_solve_in_place(h: &Hierarchy, f: &[f64], u: &mut [f64], config: &AmgConfig) -> Result<AmgSolveReport> {
    let a = h.fine_matrix();
    if f.len() != a.nrows() || u.len() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: f.len() });
    }
    if let Some(index) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut res = norm2(&a.residual(u, f));
    let mut history = vec![res];
    let mut cycles = 0;
    while !(res < config.tol) {
        if cycles >= config.max_cycles || !res.is_finite() {
            return Err(Error::AmgNotConverged { cycles, residual: res });
        }
        cycle(h, 0, u, f, config)?;
        cycles += 1;
        res = norm2(&a.residual(u, f));
        history.push(res);
    }
    Ok(AmgSolveReport { cycles, residual: res, history })
}

/// Solve `A u = f` starting from `u0` (zero if `None`).
pub fn amg_solve(h: &Hierarchy, f: &[f64], u0: Option<&[f64]>, config: &AmgConfig) -> Result<(Vec<f64>, AmgSolveReport)> {
    let mut u = match u0 {
        Some(u0) => u0.to_vec(),
        None => vec![0.0; f.len()],
    };
    let report = amg_solve_in_place(h, f, &mut u, config)?;
    Ok((u, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use csr::laplacian_2d;

    fn rhs(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 37 % 101) as f64 / 101.0) - 0.5).collect()
    }

    #[test]
    fn small_matrix_is_solved_directly() {
        let a = laplacian_2d(5);
        let h = setup_hierarchy(&a, &AmgConfig::default()).unwrap();
        assert_eq!(h.n_levels(), 1);
        let (u, rep) = amg_solve(&h, &rhs(25), None, &AmgConfig::default()).unwrap();
        assert_eq!(rep.cycles, 1);
        assert!(norm2(&a.residual(&u, &rhs(25))) < 1e-12);
    }

    #[test]
    fn poisson_converges_quickly() {
        let a = laplacian_2d(31);
        let cfg = AmgConfig::default();
        let h = setup_hierarchy(&a, &cfg).unwrap();
        assert!(h.n_levels() >= 3);
        let f = rhs(a.nrows());
        let (_, rep) = amg_solve(&h, &f, None, &cfg).unwrap();
        assert!(rep.cycles <= 15, "{:?}", rep.history);
        assert!(rep.factors().iter().all(|&q| q < 0.3), "{:?}", rep.factors());
    }

    #[test]
    fn zero_diagonal_is_reported() {
        let mut t = Vec::new();
        for i in 0..60 {
            if i != 7 {
                t.push((i, i, 2.0));
            }
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < 60 {
                t.push((i, i + 1, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(60, 60, &t).unwrap();
        match setup_hierarchy(&a, &AmgConfig::default()) {
            Err(Error::ZeroDiagonal { row }) => assert_eq!(row, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cycle_limit_is_an_error() {
        let a = laplacian_2d(31);
        let cfg = AmgConfig { max_cycles: 1, ..AmgConfig::default() };
        let h = setup_hierarchy(&a, &cfg).unwrap();
        assert!(matches!(amg_solve(&h, &rhs(a.nrows()), None, &cfg), Err(Error::AmgNotConverged { cycles: 1, .. })));
    }

    #[test]
    fn invalid_theta_rejected() {
        let cfg = AmgConfig { theta: 0.0, ..AmgConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
