use std::path::PathBuf;
use std::process::ExitCode;

use amgpi::amg::{amg_solve, format_vector, read_matrix, read_vector, setup_hierarchy, AmgConfig, CycleType};
use amgpi::bench::{format_table, run, EpsilonSpec, ProblemSelector, RunConfig, SolverKind};
use amgpi::game_model::{random_game, RandomGameSpec};
use amgpi::Error;
use clap::{Args, Parser, Subcommand};

/// Policy iteration with algebraic multigrid for zero-sum stochastic games.
#[derive(Parser)]
#[command(name = "amgpi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a benchmark, tabular or custom problem.
    Run(RunArgs),
    /// Solve a sparse linear system from a Matrix Market file.
    AmgSolve(AmgSolveArgs),
    /// Write a seeded random game in the tabular text format.
    GenRandom(GenArgs),
}

#[derive(Args)]
struct AmgArgs {
    /// Strength threshold.
    #[arg(long, default_value_t = 0.25)]
    theta: f64,
    /// Pre-smoothing sweeps.
    #[arg(long, default_value_t = 1)]
    nu1: usize,
    /// Post-smoothing sweeps.
    #[arg(long, default_value_t = 1)]
    nu2: usize,
    /// V or W.
    #[arg(long, default_value = "W")]
    cycle: CycleType,
    /// Residual tolerance of each AMG solve.
    #[arg(long, default_value_t = 1e-12)]
    amg_tol: f64,
}

impl AmgArgs {
    fn config(&self) -> AmgConfig {
        AmgConfig {
            theta: self.theta,
            nu1: self.nu1,
            nu2: self.nu2,
            cycle: self.cycle,
            tol: self.amg_tol,
            ..AmgConfig::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// isaacs-sin, stopping-parabola, double-stop, tabular:<path>, custom:<path> or random:<n>.
    problem: ProblemSelector,
    /// Subdivisions per axis.
    #[arg(long, default_value_t = 64)]
    m: usize,
    /// amgpi, lu-pi, famgpi or value-iter.
    #[arg(long, default_value = "amgpi")]
    solver: SolverKind,
    /// Stopping threshold, absolute or as a multiple of h^2 (`0.001h2`).
    #[arg(long, default_value = "1e-10")]
    epsilon: EpsilonSpec,
    /// FAMG level threshold constant.
    #[arg(long, default_value_t = 0.1)]
    fmg_c: f64,
    /// FAMG coarsenings.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    max_outer: usize,
    /// Per-iteration CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Grid dump (`x y v alpha beta`).
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Final values, one per line.
    #[arg(long)]
    values: Option<PathBuf>,
    /// Seed for random games.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    amg: AmgArgs,
}

#[derive(Args)]
struct AmgSolveArgs {
    matrix: PathBuf,
    /// Right-hand side in Matrix Market array format; defaults to all ones.
    #[arg(long)]
    rhs: Option<PathBuf>,
    /// Write the solution here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    max_cycles: usize,
    #[command(flatten)]
    amg: AmgArgs,
}

#[derive(Args)]
struct GenArgs {
    n_states: usize,
    #[arg(long, default_value_t = 3)]
    actions: usize,
    #[arg(long, default_value_t = 0.9)]
    mu: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn not_converged(e: &Error) -> bool {
    match e {
        Error::NotConverged { .. } | Error::AmgNotConverged { .. } => true,
        Error::LinearSolve { source, .. } | Error::Level { source, .. } => not_converged(source),
        _ => false,
    }
}

fn run_cmd(args: RunArgs) -> Result<bool, Error> {
    let cfg = RunConfig {
        problem: args.problem,
        m: args.m,
        solver: args.solver,
        epsilon: args.epsilon,
        fmg_c: args.fmg_c,
        levels: args.levels,
        amg: args.amg.config(),
        max_outer: args.max_outer,
        csv: args.csv,
        dump: args.dump,
        values: args.values,
        seed: args.seed,
        max_value_iters: RunConfig::default().max_value_iters,
    };
    let out = run(&cfg)?;
    print!("{}", format_table(&out.blocks));
    if !out.converged {
        eprintln!("solver stopped at the outer iteration limit");
    }
    Ok(out.converged)
}

fn amg_solve_cmd(args: AmgSolveArgs) -> Result<bool, Error> {
    let a = read_matrix(&args.matrix)?;
    let f = match &args.rhs {
        Some(p) => read_vector(p)?,
        None => vec![1.0; a.nrows()],
    };
    let cfg = AmgConfig { max_cycles: args.max_cycles, ..args.amg.config() };
    let h = setup_hierarchy(&a, &cfg)?;
    println!("levels {:?}  operator complexity {:.3}", h.level_sizes(), h.operator_complexity());
    let (u, rep) = amg_solve(&h, &f, None, &cfg)?;
    println!("cycles {}  residual {:.5e}", rep.cycles, rep.residual);
    if let Some(p) = &args.out {
        std::fs::write(p, format_vector(&u))?;
    }
    Ok(true)
}

fn gen_cmd(args: GenArgs) -> Result<bool, Error> {
    let g = random_game(&RandomGameSpec::new(args.n_states, args.actions, args.mu), args.seed)?;
    std::fs::write(&args.out, g.to_text())?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run_cmd(a),
        Command::AmgSolve(a) => amg_solve_cmd(a),
        Command::GenRandom(a) => gen_cmd(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if not_converged(&e) { 2 } else { 1 })
        }
    }
}
