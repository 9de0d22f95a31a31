use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SspgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("iterate became non-finite at iteration {k}; the stepsize is likely too large")]
    Diverged { k: u64 },

    #[error("point is outside the domain of h for sample {xi}")]
    Infeasible { xi: usize },

    #[error(
        "{what} did not converge within {iterations} iterations (achieved residual {residual:e})"
    )]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("zero-mean subgradient representation not found at tolerance {tol:e} (certificate {certificate:e})")]
    RepresentationNotFound { tol: f64, certificate: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T, E = SspgError> = std::result::Result<T, E>;

impl SspgError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SspgError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        SspgError::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(SspgError::InvalidArgument(msg()))
    }
}
