use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("word {word:#b} is not in the sector (L={sites}, up spins={n_up})")]
    Lookup { word: u64, sites: usize, n_up: usize },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Configuration problems and everything else map to distinct exit codes.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Parameter(_) | Error::Capacity(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
