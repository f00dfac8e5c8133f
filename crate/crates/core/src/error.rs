use thiserror::Error;

pub type Result<T> = std::result::Result<T, QkdError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QkdError {
    /// A numeric argument lies outside its valid range.
    #[error("parameter `{name}` = {value} is out of range: expected {expected}")]
    Parameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid bit value {0} (bits must be 0 or 1)")]
    InvalidBit(u8),

    /// A word that was required to be a codeword is not one.
    #[error("word is not a codeword of {0}")]
    NotInCode(&'static str),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    /// The classical transcript violated message ordering or content rules.
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl QkdError {
    pub(crate) fn param(name: &'static str, value: f64, expected: &'static str) -> Self {
        QkdError::Parameter { name, value, expected }
    }
}
