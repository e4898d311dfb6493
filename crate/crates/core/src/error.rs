//! Error type shared across the library.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed CSV in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("empty region")]
    EmptyRegion,

    #[error("region {width}x{height} is smaller than patch {patch_width}x{patch_height}")]
    RegionTooSmall {
        width: usize,
        height: usize,
        patch_width: usize,
        patch_height: usize,
    },

    #[error("need at least {needed} distinct inputs, found {distinct}")]
    TooFewDistinctInputs { needed: usize, distinct: usize },

    #[error("split needs {requested} records but only {available} are available")]
    SplitTooLarge { requested: usize, available: usize },

    #[error("duplicate item id {0:?}")]
    DuplicateItemId(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("query error: {0}")]
    InvalidQuery(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
