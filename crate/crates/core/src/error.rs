use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid label {name:?}: {reason}")]
    InvalidLabel { name: String, reason: String },

    #[error("labels {first:?} and {second:?} both map to tag stem {stem}")]
    RegistryCollision {
        first: String,
        second: String,
        stem: String,
    },

    #[error("label registry is empty")]
    EmptyRegistry,

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("band width {band} is narrower than the length difference {diff}")]
    InfeasibleBand { band: usize, diff: usize },

    #[error("offset {offset} is outside 0..={len}")]
    OffsetOutOfRange { offset: usize, len: usize },

    #[error("document {id:?}: {detail}")]
    InvalidDocument { id: String, detail: String },

    #[error("prediction for unknown document {0:?}")]
    UnknownDocument(String),

    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed line: {0}")]
    Protocol(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}:{line}: {detail}")]
    Parse { path: PathBuf, line: usize, detail: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
