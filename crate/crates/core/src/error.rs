use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the allocation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-domain arguments.
    #[error("invalid input: {0}")]
    Input(String),

    /// Both matrices of a GSVD pair are numerically zero.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A factorization produced something unusable (e.g. a singular triangular factor).
    #[error("decomposition failed: {0}")]
    Decomposition(String),

    /// Configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Degenerate(_) => "degenerate",
            Error::Decomposition(_) => "decomposition",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Serde(_) => "serde",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
