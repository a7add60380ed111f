use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector norm {norm} violates {constraint}")]
    NormViolation { norm: f64, constraint: &'static str },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("sample source exhausted: {needed} more examples needed")]
    InsufficientSamples { needed: usize },

    #[error("{0} requires a dataset that carries its generating instance")]
    MissingInstance(&'static str),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed data at {path}:{line}: {reason}")]
    Format {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter { name, value, reason }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, reason: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            line,
            reason: reason.to_string(),
        }
    }
}
