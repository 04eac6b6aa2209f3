use thiserror::Error;

/// Errors raised by the regularization laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the domain of a function (e.g. `t <= 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// Value not attained by a monotone function on its bracketed range.
    #[error("range error: {value} not attained on [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("degenerate rate fit: {valid} valid points, at least 4 required")]
    DegenerateFit { valid: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
