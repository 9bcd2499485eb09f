use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: file contains no data rows")]
    EmptyFile { path: PathBuf },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vertex {vertex} out of range (graph has {len} vertices)")]
    VertexOutOfRange { vertex: usize, len: usize },

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("class `{class}` has {size} instances, fewer than the {folds} folds requested")]
    ClassTooSmall {
        class: String,
        size: usize,
        folds: usize,
    },

    #[error("class `{0}` has no training instances")]
    EmptyClass(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("graph dump line {line}: {message}")]
    GraphDump { line: usize, message: String },
}

impl Error {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }
}
