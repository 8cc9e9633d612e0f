use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown app `{0}`")]
    UnknownApp(String),

    #[error("duplicate app id `{0}`")]
    DuplicateApp(String),

    #[error("invalid app descriptor: {0}")]
    InvalidApp(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {malformed} of {total} records malformed (first: line {first_line}: {first_reason})")]
    SchemaViolation {
        path: PathBuf,
        malformed: usize,
        total: usize,
        first_line: usize,
        first_reason: String,
    },

    #[error("{path}: unsupported store format version {found} (expected {expected})")]
    VersionMismatch {
        path: PathBuf,
        found: u64,
        expected: u64,
    },

    #[error("{path}: corrupt store: {reason}")]
    CorruptStore { path: PathBuf, reason: String },

    #[error("text has no tokens left after cleaning")]
    EmptyTextEmbedding,

    #[error("text #{index}: {source}")]
    AtIndex {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("vector contains a non-finite component")]
    NonFinite,

    #[error("embedding sidecar unavailable at {endpoint}: {reason}")]
    SidecarUnavailable { endpoint: String, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("empty word set")]
    EmptySet,

    #[error("no relevance labels for pair ({0}, {1})")]
    MissingLabels(String, String),

    #[error("no decided recommendations")]
    NoDecidedRecommendations,

    #[error("unknown report `{report_id}` in app `{app_id}`")]
    UnknownReport { app_id: String, report_id: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_index(index: usize, source: Error) -> Self {
        Error::AtIndex {
            index,
            source: Box::new(source),
        }
    }
}
