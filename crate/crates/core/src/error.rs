use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("function has empty effective domain (every sample is +inf)")]
    EmptyDomain,

    #[error("value must be finite or +inf, got {0}")]
    InvalidValue(f64),

    #[error("sample at index {index} is +inf")]
    InfiniteSample { index: usize },

    #[error("function is not discretely convex{}", lambda.map(|l| format!(" (lambda = {l})")).unwrap_or_default())]
    NotConvex { lambda: Option<f64> },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("graph is empty")]
    EmptyGraph,

    #[error("outside the finite-valued setting: {0}")]
    NonFinite(String),

    #[error("malformed input {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by user input (configuration, files, parameters)
    /// rather than by the numerical pipeline itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::InvalidParams(_)
                | Error::EmptyDomain
                | Error::InvalidValue(_)
                | Error::NotConvex { .. }
                | Error::Malformed { .. }
                | Error::Io { .. }
                | Error::Csv(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
