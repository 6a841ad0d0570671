//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("artifact {path} is malformed: {reason}")]
    MalformedArtifact { path: PathBuf, reason: String },

    #[error("missing artifact for stage `{stage}`: {path} not found; run `review-insight {stage}` first")]
    MissingArtifact { stage: String, path: PathBuf },

    #[error("stale artifact {path}: produced under a different configuration; rerun `review-insight {stage}`")]
    StaleArtifact { stage: String, path: PathBuf },

    #[error("restaurant {0} has no topic rating from any representative user")]
    RestaurantUncovered(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code for the CLI contract: 1 for validation-class
    /// errors, 2 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
