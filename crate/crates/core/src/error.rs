use thiserror::Error;

/// Errors raised by the solvers, builders and file readers in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid action at state {state}: {reason}")]
    InvalidAction { state: usize, reason: String },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is numerically singular at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("coarsest AMG level {level} is singular (pivot {pivot})")]
    SingularCoarseLevel { level: usize, pivot: usize },

    #[error("zero diagonal in row {row}")]
    ZeroDiagonal { row: usize },

    #[error("AMG did not converge in {cycles} cycles (residual {residual:e})")]
    AmgNotConverged { cycles: usize, residual: f64 },

    #[error("linear solve failed at outer iteration {outer}, inner iteration {inner}: {source}")]
    LinearSolve {
        outer: usize,
        inner: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{what} did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported scheme: {0}")]
    UnsupportedScheme(String),

    #[error("not available: {0}")]
    NotAvailable(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
