use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid diffusion rates: {0}")]
    InvalidRates(String),

    #[error("invalid reaction scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state space of {states} states exceeds the cap of {cap}")]
    StateSpaceCap { states: usize, cap: usize },

    #[error("{count} non-target states cannot reach the target set")]
    Unreachable { count: usize },

    #[error(
        "linear solver did not converge after {iterations} iterations (residual {residual:e})"
    )]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("series did not converge within {max_terms} terms")]
    SeriesCap { max_terms: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than resource limits or I/O.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidDomain(_)
                | Error::InvalidRates(_)
                | Error::InvalidScheme(_)
                | Error::InvalidArgument(_)
                | Error::Unreachable { .. }
                | Error::Parse(_)
        )
    }
}
