//! Benchmark harness: run a solver on a problem, then print a table, write
//! per-iteration CSV, and dump grid data for plotting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::amg::AmgConfig;
use crate::error::{Error, Result};
use crate::famgpi::famgpi_solve;
use crate::game_model::{random_game, residual, value_iteration, Game, GameInstance, PolicyPair, RandomGameSpec};
use crate::isaacs_disc::{CustomProblem, DoubleStop, GridProblem, GridSpec, IsaacsSin, StoppingParabola};
use crate::policy_iteration::{solve_game, LinearSolver, OuterRecord, PiConfig, SolveReport, Termination};

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSelector {
    IsaacsSin,
    StoppingParabola,
    DoubleStop,
    /// A game file in the tabular text format.
    Tabular(PathBuf),
    /// A TOML custom grid problem.
    Custom(PathBuf),
    /// A seeded random tabular game with this many states.
    Random(usize),
}

impl ProblemSelector {
    pub fn is_grid(&self) -> bool {
        !matches!(self, ProblemSelector::Tabular(_) | ProblemSelector::Random(_))
    }
}

impl FromStr for ProblemSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isaacs-sin" => Ok(ProblemSelector::IsaacsSin),
            "stopping-parabola" => Ok(ProblemSelector::StoppingParabola),
            "double-stop" => Ok(ProblemSelector::DoubleStop),
            _ => {
                if let Some(p) = s.strip_prefix("tabular:") {
                    Ok(ProblemSelector::Tabular(p.into()))
                } else if let Some(p) = s.strip_prefix("custom:") {
                    Ok(ProblemSelector::Custom(p.into()))
                } else if let Some(n) = s.strip_prefix("random:") {
                    n.parse()
                        .ok()
                        .filter(|&n| n > 0)
                        .map(ProblemSelector::Random)
                        .ok_or_else(|| Error::Config(format!("bad state count in '{s}'")))
                } else {
                    Err(Error::Config(format!("unknown problem '{s}'")))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    AmgPi,
    LuPi,
    FamgPi,
    ValueIter,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amgpi" => Ok(SolverKind::AmgPi),
            "lu-pi" => Ok(SolverKind::LuPi),
            "famgpi" => Ok(SolverKind::FamgPi),
            "value-iter" => Ok(SolverKind::ValueIter),
            _ => Err(Error::Config(format!("unknown solver '{s}'"))),
        }
    }
}

/// A stopping threshold, optionally proportional to `h^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonSpec {
    Absolute(f64),
    /// `value * h^2`, written `0.001h2`.
    TimesH2(f64),
}

impl EpsilonSpec {
    pub fn resolve(self, h: f64) -> f64 {
        match self {
            EpsilonSpec::Absolute(e) => e,
            EpsilonSpec::TimesH2(c) => c * h * h,
        }
    }
}

impl FromStr for EpsilonSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad epsilon '{s}'"));
        let (num, scaled) = match s.strip_suffix("h2") {
            Some(n) => (n.trim_end_matches('*'), true),
            None => (s, false),
        };
        let v: f64 = num.parse().map_err(|_| bad())?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(bad());
        }
        Ok(if scaled { EpsilonSpec::TimesH2(v) } else { EpsilonSpec::Absolute(v) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSelector,
    pub m: usize,
    pub solver: SolverKind,
    pub epsilon: EpsilonSpec,
    /// FAMG level threshold constant `c` in `c h_l^2`.
    pub fmg_c: f64,
    /// FAMG coarsenings; `None` picks the default.
    pub levels: Option<usize>,
    pub amg: AmgConfig,
    pub max_outer: usize,
    pub max_value_iters: usize,
    pub csv: Option<PathBuf>,
    pub dump: Option<PathBuf>,
    /// Final value vector, one number per line.
    pub values: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemSelector::IsaacsSin,
            m: 64,
            solver: SolverKind::AmgPi,
            epsilon: EpsilonSpec::Absolute(1e-10),
            fmg_c: 0.1,
            levels: None,
            amg: AmgConfig::default(),
            max_outer: 1000,
            max_value_iters: 1_000_000,
            csv: None,
            dump: None,
            values: None,
            seed: 0,
        }
    }
}

/// Reports of one grid level (one block for single-level solvers).
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBlock {
    /// Grid points per axis including the boundary, or the state count of a
    /// tabular game.
    pub level_points: usize,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub blocks: Vec<ReportBlock>,
    pub v: Vec<f64>,
    pub converged: bool,
}

impl RunOutcome {
    pub fn final_record(&self) -> Option<&OuterRecord> {
        self.blocks.last().and_then(|b| b.report.last())
    }
}

fn pi_config(cfg: &RunConfig, epsilon: f64) -> PiConfig {
    let linear_solver = match cfg.solver {
        SolverKind::LuPi => LinearSolver::Direct,
        _ => LinearSolver::Amg(cfg.amg.clone()),
    };
    PiConfig { epsilon, max_outer: cfg.max_outer, linear_solver, ..PiConfig::default() }
}

fn value_iter_report<G: Game>(game: &G, epsilon: f64, max_iters: usize, exact: Option<&[f64]>) -> Result<(Vec<f64>, SolveReport)> {
    let t0 = Instant::now();
    let n = game.n_states();
    let (v, iters) = value_iteration(game, &vec![0.0; n], epsilon, max_iters)?;
    let (res_inf, res_rms) = residual(game, &v)?;
    let (err_inf, err_rms) = match exact {
        Some(u) => {
            let (a, b) = crate::game_model::error_norms(&v, u)?;
            (Some(a), Some(b))
        }
        None => (None, None),
    };
    let record = OuterRecord {
        ki: iters,
        nkj: 0,
        amg_iters: Vec::new(),
        res_inf,
        res_rms,
        err_inf,
        err_rms,
        elapsed_seconds: t0.elapsed().as_secs_f64(),
    };
    let report = SolveReport {
        records: vec![record],
        termination: Termination::Residual,
        max_inner_increase: 0.0,
        max_outer_decrease: 0.0,
        repeated_policy: false,
    };
    Ok((v, report))
}

fn run_tabular(game: &GameInstance, cfg: &RunConfig) -> Result<RunOutcome> {
    let eps = match cfg.epsilon {
        EpsilonSpec::Absolute(e) => e,
        EpsilonSpec::TimesH2(_) => return Err(Error::Config("h-relative epsilon needs a grid problem".into())),
    };
    if cfg.dump.is_some() {
        return Err(Error::Config("grid dumps need a grid problem".into()));
    }
    let n = game.n_states();
    let (v, report) = match cfg.solver {
        SolverKind::FamgPi => return Err(Error::Config("famgpi requires a grid problem".into())),
        SolverKind::ValueIter => value_iter_report(game, eps, cfg.max_value_iters, None)?,
        _ => {
            let s = solve_game(game, game.initial_policy(), vec![0.0; n], &pi_config(cfg, eps), None)?;
            (s.v, s.report)
        }
    };
    let converged = report.converged();
    Ok(RunOutcome { blocks: vec![ReportBlock { level_points: n, report }], v, converged })
}

fn run_grid<P: GridProblem>(problem: &P, cfg: &RunConfig) -> Result<RunOutcome> {
    if cfg.m < 4 {
        return Err(Error::Config(format!("grid problems need m >= 4, got {}", cfg.m)));
    }
    let grid = GridSpec::new(problem.dim(), cfg.m)?;
    let eps = cfg.epsilon.resolve(grid.h());
    let exact = match problem.exact_solution(&grid) {
        Ok(u) => Some(u),
        Err(Error::NotAvailable(_)) => None,
        Err(e) => return Err(e),
    };
    let (v, policy, blocks) = match cfg.solver {
        SolverKind::FamgPi => {
            let s = famgpi_solve(problem, cfg.m, cfg.levels, cfg.fmg_c, eps, &pi_config(cfg, eps))?;
            let blocks = s
                .levels
                .into_iter()
                .map(|l| ReportBlock { level_points: l.grid.m() + 1, report: l.report })
                .collect();
            (s.v, Some(s.policy), blocks)
        }
        SolverKind::ValueIter => {
            let game = problem.build(&grid)?;
            let (v, report) = value_iter_report(&game, eps, cfg.max_value_iters, exact.as_deref())?;
            (v, None, vec![ReportBlock { level_points: cfg.m + 1, report }])
        }
        SolverKind::AmgPi | SolverKind::LuPi => {
            let game = problem.build(&grid)?;
            let s = solve_game(&game, game.initial_policy(), vec![0.0; grid.n_states()], &pi_config(cfg, eps), exact.as_deref())?;
            (s.v, Some(s.policy), vec![ReportBlock { level_points: cfg.m + 1, report: s.report }])
        }
    };
    if let Some(path) = &cfg.dump {
        let game = problem.build(&grid)?;
        let policy = match policy {
            Some(p) => p,
            None => greedy_policy(&game, &v)?,
        };
        emit_grid_dump(problem, &game, &grid, &v, &policy, path)?;
    }
    let converged = blocks.iter().all(|b| b.report.converged());
    Ok(RunOutcome { blocks, v, converged })
}

fn greedy_policy<G: Game>(game: &G, v: &[f64]) -> Result<PolicyPair<G::Max, G::Min>> {
    let mut alpha = Vec::with_capacity(game.n_states());
    let mut beta = Vec::with_capacity(game.n_states());
    for x in 0..game.n_states() {
        let (a, b, _) = game.best_max(x, v)?;
        alpha.push(a);
        beta.push(b);
    }
    Ok(PolicyPair { alpha, beta })
}

/// Build the problem, run the solver, and write the requested files.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    if cfg.solver == SolverKind::FamgPi && !cfg.problem.is_grid() {
        return Err(Error::Config("famgpi requires a grid problem".into()));
    }
    let outcome = match &cfg.problem {
        ProblemSelector::IsaacsSin => run_grid(&IsaacsSin::default(), cfg)?,
        ProblemSelector::StoppingParabola => run_grid(&StoppingParabola::default(), cfg)?,
        ProblemSelector::DoubleStop => run_grid(&DoubleStop, cfg)?,
        ProblemSelector::Custom(path) => run_grid(&CustomProblem::read(path)?, cfg)?,
        ProblemSelector::Tabular(path) => run_tabular(&GameInstance::read(path)?, cfg)?,
        ProblemSelector::Random(n) => {
            let game = random_game(&RandomGameSpec::new(*n, 3, 0.9), cfg.seed)?;
            run_tabular(&game, cfg)?
        }
    };
    if let Some(path) = &cfg.csv {
        emit_csv(&outcome.blocks, path)?;
    }
    if let Some(path) = &cfg.values {
        let text: String = outcome.v.iter().map(|x| format!("{x:.17e}\n")).collect();
        std::fs::write(path, text)?;
    }
    Ok(outcome)
}

fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

fn opt_sci(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

/// Human-readable table, one row per outer iteration.
pub fn format_table(blocks: &[ReportBlock]) -> String {
    let mut out = String::new();
    for b in blocks {
        let _ = writeln!(out, "points {}  ({:?})", b.level_points, b.report.termination);
        let _ = writeln!(
            out,
            "{:>5} {:>5} {:>16} {:>12} {:>12} {:>12} {:>12} {:>10}",
            "ki", "nkj", "AMG", "res_inf", "res_L2", "err_inf", "err_L2", "cpu_s"
        );
        for r in &b.report.records {
            let amg: Vec<String> = r.amg_iters.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(
                out,
                "{:>5} {:>5} {:>16} {:>12} {:>12} {:>12} {:>12} {:>10.3}",
                r.ki,
                r.nkj,
                amg.join(","),
                sci(r.res_inf),
                sci(r.res_rms),
                r.err_inf.map(sci).unwrap_or_else(|| "-".into()),
                r.err_rms.map(sci).unwrap_or_else(|| "-".into()),
                r.elapsed_seconds
            );
        }
    }
    out
}

pub const CSV_HEADER: &str = "level_points,ki,nkj,amg_iters,res_inf,res_rms,err_inf,err_rms,cpu_s";

pub fn format_csv(blocks: &[ReportBlock]) -> Result<String> {
    if blocks.iter().all(|b| b.report.records.is_empty()) {
        return Err(Error::Config("no records to write".into()));
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for b in blocks {
        for r in &b.report.records {
            let amg: Vec<String> = r.amg_iters.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                b.level_points,
                r.ki,
                r.nkj,
                amg.join(";"),
                sci(r.res_inf),
                sci(r.res_rms),
                opt_sci(r.err_inf),
                opt_sci(r.err_rms),
                sci(r.elapsed_seconds)
            );
        }
    }
    Ok(out)
}

pub fn emit_csv(blocks: &[ReportBlock], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_csv(blocks)?)?;
    Ok(())
}

/// One parsed CSV data row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub level_points: usize,
    pub ki: usize,
    pub nkj: usize,
    pub amg_iters: Vec<usize>,
    pub res_inf: f64,
    pub res_rms: f64,
    pub err_inf: Option<f64>,
    pub err_rms: Option<f64>,
    pub cpu_s: f64,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: "missing CSV header".into() }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let err = |m: &str| Error::Parse { line: line_no, message: m.to_string() };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(err("expected 9 fields"));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| err("bad integer"));
        let float = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { float(s).map(Some) };
        let amg_iters = if f[3].is_empty() { Vec::new() } else { f[3].split(';').map(int).collect::<Result<_>>()? };
        rows.push(CsvRow {
            level_points: int(f[0])?,
            ki: int(f[1])?,
            nkj: int(f[2])?,
            amg_iters,
            res_inf: float(f[4])?,
            res_rms: float(f[5])?,
            err_inf: opt(f[6])?,
            err_rms: opt(f[7])?,
            cpu_s: float(f[8])?,
        });
    }
    Ok(rows)
}

/// `x y v alpha beta` per interior point; `y` is 0 on one-dimensional grids.
pub fn format_grid_dump<P: GridProblem>(
    problem: &P,
    game: &P::G,
    grid: &GridSpec,
    v: &[f64],
    policy: &PolicyPair<<P::G as Game>::Max, <P::G as Game>::Min>,
) -> Result<String> {
    let n = grid.n_states();
    if v.len() != n || policy.alpha.len() != n || policy.beta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.len() });
    }
    let mut out = String::new();
    for s in 0..n {
        let p = grid.state_point(s);
        let (a, b) = problem.labels(game, s, &policy.alpha[s], &policy.beta[s]);
        let y = if grid.dim() > 1 { p[1] } else { 0.0 };
        let _ = writeln!(out, "{} {} {:.12e} {} {}", p[0], y, v[s], a, b);
    }
    Ok(out)
}

pub fn emit_grid_dump<P: GridProblem>(
    problem: &P,
    game: &P::G,
    grid: &GridSpec,
    v: &[f64],
    policy: &PolicyPair<<P::G as Game>::Max, <P::G as Game>::Min>,
    path: impl AsRef<Path>,
) -> Result<()> {
    std::fs::write(path, format_grid_dump(problem, game, grid, v, policy)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(ki: usize) -> OuterRecord {
        OuterRecord {
            ki,
            nkj: 2,
            amg_iters: vec![5, 4],
            res_inf: 1.234567e-5,
            res_rms: 3.0e-6,
            err_inf: None,
            err_rms: Some(2.5e-7),
            elapsed_seconds: 0.0123456789,
        }
    }

    fn block(points: usize, n: usize) -> ReportBlock {
        ReportBlock {
            level_points: points,
            report: SolveReport {
                records: (1..=n).map(record).collect(),
                termination: Termination::Residual,
                max_inner_increase: 0.0,
                max_outer_decrease: 0.0,
                repeated_policy: false,
            },
        }
    }

    #[test]
    fn selectors_parse() {
        assert_eq!("double-stop".parse::<ProblemSelector>().unwrap(), ProblemSelector::DoubleStop);
        assert_eq!("tabular:g.txt".parse::<ProblemSelector>().unwrap(), ProblemSelector::Tabular("g.txt".into()));
        assert_eq!("random:12".parse::<ProblemSelector>().unwrap(), ProblemSelector::Random(12));
        assert!("random:0".parse::<ProblemSelector>().is_err());
        assert!("poisson".parse::<ProblemSelector>().is_err());
        assert_eq!("lu-pi".parse::<SolverKind>().unwrap(), SolverKind::LuPi);
        assert!("newton".parse::<SolverKind>().is_err());
    }

    #[test]
    fn epsilon_literals() {
        assert_eq!("0.001h2".parse::<EpsilonSpec>().unwrap(), EpsilonSpec::TimesH2(0.001));
        assert_eq!("1e-10".parse::<EpsilonSpec>().unwrap(), EpsilonSpec::Absolute(1e-10));
        assert_eq!(EpsilonSpec::TimesH2(0.001).resolve(0.5), 0.00025);
        assert!("-1".parse::<EpsilonSpec>().is_err());
        assert!("h2".parse::<EpsilonSpec>().is_err());
    }

    #[test]
    fn one_row_csv_has_two_lines() {
        let s = format_csv(&[block(65, 1)]).unwrap();
        assert_eq!(s.lines().count(), 2);
        assert_eq!(s.lines().nth(1).unwrap(), "65,1,2,5;4,1.23457e-5,3.00000e-6,,2.50000e-7,1.23457e-2");
    }

    #[test]
    fn csv_round_trip_keeps_block_order() {
        let blocks = [block(9, 2), block(17, 1)];
        let rows = parse_csv(&format_csv(&blocks).unwrap()).unwrap();
        assert_eq!(rows.iter().map(|r| r.level_points).collect::<Vec<_>>(), vec![9, 9, 17]);
        assert_eq!(rows[1].ki, 2);
        assert_eq!(rows[0].amg_iters, vec![5, 4]);
        assert!((rows[0].res_inf - 1.234567e-5).abs() <= 5e-11);
        assert_eq!(rows[0].err_inf, None);
        assert_eq!(rows[0].err_rms, Some(2.5e-7));
    }

    #[test]
    fn empty_reports_rejected() {
        assert!(format_csv(&[block(5, 0)]).is_err());
        assert!(parse_csv("nope\n").is_err());
    }

    #[test]
    fn dump_has_one_row_per_point() {
        let grid = GridSpec::new(2, 4).unwrap();
        let p = StoppingParabola::default();
        let game = p.build(&grid).unwrap();
        let s = format_grid_dump(&p, &game, &grid, &[0.0; 9], &game.initial_policy()).unwrap();
        assert_eq!(s.lines().count(), 9);
        assert!(s.lines().all(|l| l.split_whitespace().count() == 5));
    }

    #[test]
    fn famg_rejects_tabular() {
        let cfg = RunConfig { problem: ProblemSelector::Random(5), solver: SolverKind::FamgPi, ..RunConfig::default() };
        assert!(run(&cfg).is_err());
    }
}
