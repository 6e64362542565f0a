use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the lab. The CLI maps each family onto an exit code.
#[derive(Debug, Error)]
pub enum LabError {
    /// A configuration value is missing, malformed or out of range. `key` is
    /// the dotted config path of the offending entry.
    #[error("invalid config: {key}: {message}")]
    Config { key: String, message: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("statistics: {0}")]
    Stats(String),

    #[error("report shape mismatch: {0}")]
    Shape(String),

    #[error("{0}")]
    NotFound(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl LabError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
