use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SolveError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("scenario failed validation: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),

    #[error("consumption must be non-negative, got {0} MW")]
    NegativeConsumption(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("not applicable: {0}")]
    NotApplicable(&'static str),

    #[error("oracle grid is empty: {0}")]
    EmptyGrid(&'static str),

    #[error("failed to parse {} at byte {offset} (line {line}, column {column}): {message}", path.display())]
    Parse {
        path: PathBuf,
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Solve(#[from] SolveError),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
