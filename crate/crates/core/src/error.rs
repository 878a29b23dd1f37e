//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by signal construction, channel generation, demodulation,
/// codecs and the simulation driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch in {context}: {left} vs {right}")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bit value {value} at index {index} is not 0 or 1")]
    InvalidBit { index: usize, value: u8 },

    #[error("symbol at index {0} is not an antipodal BPSK point")]
    NonAntipodalSymbol(usize),

    #[error("all branch metrics are zero at epoch {0} (numerically dead trellis)")]
    DeadTrellis(usize),

    #[error("zero normalizer at epoch {0}")]
    ZeroNormalizer(usize),

    #[error("exhaustive search over {epochs} epochs exceeds the cap of {max}")]
    OracleTooLong { epochs: usize, max: usize },

    #[error("asset error: {0}")]
    Asset(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
