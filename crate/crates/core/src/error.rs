use thiserror::Error;

/// Errors produced by curve construction, test execution and data ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// A grid failed validation (not uniform, not anchored at 0 and 1, ...).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// An argument violated a precondition (empty set, bad range, block
    /// length exceeding the sample size, alpha outside (0, 1), ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two curves or curve sets do not share the same grid.
    #[error("grid mismatch between operands")]
    GridMismatch,

    /// A raw-panel unit could not be smoothed into a curve.
    #[error("cannot ingest unit `{unit}`: {reason}")]
    Ingestion { unit: String, reason: String },

    /// Malformed text input (CSV or key=value config).
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A condition that cannot be reached through the public API; reported
    /// instead of panicking so callers can distinguish it from bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by caller-supplied data or parameters, false
    /// for defects inside the library. The CLI maps these to exit code 2
    /// and 1 respectively.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}
