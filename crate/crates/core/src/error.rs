use thiserror::Error;

use crate::solver::TraceRow;

pub type Result<T> = std::result::Result<T, MvmcError>;

#[derive(Debug, Error)]
pub enum MvmcError {
    /// A dataset file is missing, unreadable or ragged.
    #[error("ingestion error in view {view}: {message}")]
    Ingestion { view: String, message: String },

    /// A matrix entry is NaN or infinite.
    #[error("non-finite entry in view {view} at row {row}, column {col}")]
    NonFinite { view: usize, row: usize, col: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A metric is undefined for the given labeling.
    #[error("metric undefined: {0}")]
    Metric(String),

    /// The solver produced a non-finite iterate.
    #[error("solver diverged at iteration {iteration}")]
    Divergence {
        iteration: usize,
        trace: Vec<TraceRow>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl MvmcError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        MvmcError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        MvmcError::Shape(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        MvmcError::Parameter(msg.into())
    }
}
