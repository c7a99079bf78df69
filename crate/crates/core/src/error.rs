use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("value for `{domain}` lies outside its domain")]
    OutOfDomain { domain: String },

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("labels must contain both classes")]
    SingleClass,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("schema mismatch: expected `{expected}`, got `{actual}`")]
    SchemaMismatch { expected: String, actual: String },

    #[error("detector failed: {0}")]
    Detector(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected, actual })
        }
    }
}
