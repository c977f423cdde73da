use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid configuration; carries every offending key.
    #[error("invalid configuration: {}", .keys.iter().map(|(k, why)| format!("{k} ({why})")).collect::<Vec<_>>().join(", "))]
    Config { keys: Vec<(String, String)> },

    #[error("parse error in {origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, why: impl Into<String>) -> Self {
        Error::Config {
            keys: vec![(key.into(), why.into())],
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io { path: path.into(), err }
    }
}
