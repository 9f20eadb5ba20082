use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(String),
    #[error("unsupported channel count: {0}")]
    UnsupportedChannels(String),
    #[error("corrupt stream: {0}")]
    Corrupt(String),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("insufficient correspondences: need at least 4, got {0}")]
    InsufficientCorrespondences(usize),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("homography is not invertible")]
    NotInvertible,
    #[error("zero variance: {0}")]
    ZeroVariance(String),
    #[error("entirely black image")]
    AllBlack,
    #[error("landmark out of bounds: {0}")]
    LandmarkOutOfBounds(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
