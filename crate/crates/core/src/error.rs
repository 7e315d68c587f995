//! Error type shared by every pipeline stage.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: field `{field}`: {message}")]
    Malformed {
        path: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{path}:{line}: record `{id}` violates invariant: {reason}")]
    InvariantViolation {
        path: String,
        line: usize,
        id: String,
        reason: String,
    },

    #[error("{path}:{line}: {kind} references unknown project `{project_id}`")]
    DanglingReference {
        path: String,
        line: usize,
        kind: &'static str,
        project_id: String,
    },

    #[error("{path}:{line}: duplicate {kind} id `{id}`")]
    DuplicateId {
        path: String,
        line: usize,
        kind: &'static str,
        id: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("vocabulary is empty after applying min_count = {min_count}")]
    EmptyVocabulary { min_count: usize },

    #[error("labels contain a single class; a binary target is required")]
    SingleClass,

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse failure class, used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Numeric(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}
