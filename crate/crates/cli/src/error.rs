use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("cannot parse config {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] ergodyn_core::Error),

    #[error("cannot serialise result: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config { key: key.to_string(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
