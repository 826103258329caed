use std::path::PathBuf;

use qbench_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// `pointer` is a JSON pointer into the offending document.
    #[error("config {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error("records line {line}: {message}")]
    Record { line: u64, message: String },

    #[error("angle {angle} deg: only {found} records within {tolerance} deg, {needed} needed (short by {})", needed - found)]
    InsufficientRecords {
        angle: f64,
        tolerance: f64,
        needed: usize,
        found: usize,
    },

    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
