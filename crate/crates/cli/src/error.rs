use present_dfa::{DfaError, ParseHexError, TrojanError};
use thiserror::Error;

use crate::config::ConfigError;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CANDIDATES: u8 = 3;
pub const EXIT_KEY_SEARCH: u8 = 4;
pub const EXIT_OTHER: u8 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Attack(#[from] DfaError),
    #[error("recovered key {recovered} does not match the configured key {expected}")]
    WrongKey { recovered: String, expected: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl From<ParseHexError> for CliError {
    fn from(e: ParseHexError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<TrojanError> for CliError {
    fn from(e: TrojanError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl CliError {
    /// 2 usage, 3 contradictory or empty candidate information, 4 key search.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Attack(DfaError::NoCandidateFound { .. } | DfaError::NoKnownPair) => EXIT_KEY_SEARCH,
            CliError::Attack(DfaError::Fault(_) | DfaError::InvalidMask(_)) => EXIT_USAGE,
            CliError::Attack(_) => EXIT_CANDIDATES,
            CliError::WrongKey { .. } => EXIT_KEY_SEARCH,
            CliError::Io(_) | CliError::Json(_) => EXIT_OTHER,
        }
    }
}
