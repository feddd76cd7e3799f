use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("ghost layer not populated for field `{0}`")]
    MissingGhosts(&'static str),

    #[error("degenerate director at node ({i},{j}): |d| = {norm:.3e} < {tol:.3e}")]
    DegenerateDirector { i: usize, j: usize, norm: f64, tol: f64 },

    #[error("linear solver `{which}` did not converge in {iters} iterations (residual {residual:.3e})")]
    NonConvergence { which: &'static str, iters: usize, residual: f64 },

    #[error("numerical abort at step {step}, t = {t:.6e}: {msg}")]
    NumericalAbort { step: usize, t: f64, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
