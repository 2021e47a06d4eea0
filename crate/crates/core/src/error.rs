use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed gate, index or length relationship.
    #[error("structural error: {0}")]
    Structural(String),
    /// A vector could not be amplitude encoded.
    #[error("encoding error: {0}")]
    Encoding(String),
    /// More pixels than the register can hold.
    #[error("capacity error: {pixels} pixels do not fit in {amplitudes} amplitudes")]
    Capacity { pixels: usize, amplitudes: usize },
    /// Invalid model, schedule or run configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Binary file content does not follow the expected layout.
    #[error("format error: {0}")]
    Format(String),
    /// Declared and actual payload sizes disagree.
    #[error("length error: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
