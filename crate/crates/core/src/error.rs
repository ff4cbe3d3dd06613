use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the search engine, the benchmark suite and the harness.
#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("gain system is singular even after diagonal jitter (dimension {dim})")]
    SingularGain { dim: usize },

    #[error("non-positive absorption coefficient {value} at node {node}")]
    NonPositiveCoefficient { node: usize, value: f64 },

    #[error("random draw tape mismatch: {0}")]
    Tape(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl SearchError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        SearchError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SearchError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, SearchError>;
