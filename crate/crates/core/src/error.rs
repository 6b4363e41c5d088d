//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by corpus loading, indexing, retrieval and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A line in an input file could not be parsed.
    #[error("{path}:{line}: {msg}")]
    Malformed {
        path: String,
        line: usize,
        msg: String,
    },

    /// Two records in one collection share an id.
    #[error("duplicate id {id:?} in {context}")]
    DuplicateId { id: String, context: String },

    /// An id or text field failed validation.
    #[error("invalid record: {0}")]
    InvalidRecord(String),

    /// A collection that must be non-empty was empty.
    #[error("empty collection: {0}")]
    EmptyCollection(String),

    /// A parameter was outside its legal range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// A document id was not found where one was required.
    #[error("unknown document id {0:?}")]
    UnknownDoc(String),

    /// Vector dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimMismatch {
        expected: usize,
        actual: usize,
        context: String,
    },

    /// A binary artifact has a bad magic number, unsupported version, or is
    /// otherwise structurally unreadable.
    #[error("bad file format in {path}: {msg}")]
    Format { path: String, msg: String },

    /// The embedding provider failed after exhausting retries.
    #[error("embedding provider error: {0}")]
    Provider(String),

    /// A vector normalized to zero (degenerate embedding).
    #[error("zero vector: {0}")]
    ZeroVector(String),

    /// Inputs are structurally valid but unusable for the requested
    /// operation (missing ids, mismatched grids, nothing to score).
    #[error("{0}")]
    InvalidData(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
