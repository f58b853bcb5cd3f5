use thiserror::Error;

/// Errors raised by the computation modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecflowError {
    #[error(
        "Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal mass {off_norm:e})"
    )]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    Asymmetric { row: usize, col: usize, gap: f64 },

    #[error("matrix rows are ragged or empty: {0}")]
    MalformedMatrix(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("argument out of supported range: {0}")]
    OutOfRange(String),

    #[error("bracket scan for zero {m} of J_{n} exhausted its window at x = {limit}")]
    BracketFailure { n: usize, m: usize, limit: f64 },

    #[error("custom spectrum has only {available} eigenvalues, {requested} requested")]
    SpectrumExhausted { available: usize, requested: usize },

    #[error("invalid signature split p1 = {p1}, p2 = {p2}: {reason}")]
    InvalidSignatureSplit {
        p1: usize,
        p2: usize,
        reason: &'static str,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unsupported domain for x-dependent coefficients: {0}")]
    UnsupportedDomain(String),

    #[error("assembled operator at lambda = {lambda} is singular (eigenvalue {eigenvalue:e})")]
    SingularEndpoint { lambda: f64, eigenvalue: f64 },

    #[error(
        "crossing at lambda = {lambda} has a degenerate crossing form (eigenvalue {eigenvalue:e})"
    )]
    DegenerateCrossing { lambda: f64, eigenvalue: f64 },
}

pub type Result<T> = std::result::Result<T, SpecflowError>;
