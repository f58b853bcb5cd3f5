use specflow_core::SpecflowError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Missing, extra or malformed fields, including size mismatches.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("asymmetry error: `{field}` has |m[{row}][{col}] - m[{col}][{row}]| = {gap:e} above the repair threshold")]
    Asymmetry {
        field: String,
        row: usize,
        col: usize,
        gap: f64,
    },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("{context}: {source}")]
    Compute {
        context: String,
        #[source]
        source: SpecflowError,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("usage error: {0}")]
    Usage(String),
}

impl CliError {
    pub fn compute(context: impl Into<String>) -> impl FnOnce(SpecflowError) -> CliError {
        let context = context.into();
        move |source| CliError::Compute { context, source }
    }

    pub fn io(path: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// Every error maps to exit status 1.
    pub fn exit_code(&self) -> i32 {
        1
    }
}
