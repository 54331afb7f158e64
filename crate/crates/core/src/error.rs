//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by tensor operations, solvers, and diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Two tensors were expected to share a shape.
    #[error("tensor shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    /// A matrix dimension did not match (rows, columns, or lengths).
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A mode index outside `1..=N`.
    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    /// A square matrix was required.
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    /// A factor column collapsed to zero during normalization (rank overestimated).
    #[error("degenerate component: column {column} has zero norm{}", iteration.map(|k| format!(" at iteration {k}")).unwrap_or_default())]
    DegenerateComponent {
        column: usize,
        iteration: Option<usize>,
    },

    /// An input that must be nonzero (or nondegenerate) was not.
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    /// A matrix whose columns must be unit-normalized was not.
    #[error("column {column} is not unit-normalized (norm {norm})")]
    UnnormalizedColumns { column: usize, norm: f64 },

    /// Too few data points for a fit.
    #[error("insufficient data: need at least {needed} usable points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// An invalid configuration value.
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    /// A tensor or model file failed to parse; `column` counts whitespace-
    /// separated tokens within the line, starting at 1.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// An underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
