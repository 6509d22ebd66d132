//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PsError {
    #[error("malformed network: {0}")]
    MalformedNetwork(String),
    #[error("unknown percept '{0}'")]
    UnknownPercept(String),
    #[error("unknown action '{0}'")]
    UnknownAction(String),
    #[error("learn called without a preceding act")]
    Sequencing,
    #[error("config error: {0}")]
    Config(String),
    #[error("map error: {0}")]
    Map(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PsError>;
