use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("symbol {symbol} at position {position} is outside the alphabet of size {alphabet}")]
    SymbolOutOfRange {
        symbol: u32,
        position: usize,
        alphabet: usize,
    },

    #[error("codebook error: {0}")]
    Codebook(String),

    #[error("codebook parse error at line {line}: {reason}")]
    CodebookParse { line: usize, reason: String },

    #[error("protograph error: {0}")]
    Protograph(String),

    #[error("decode failure: {0}")]
    DecodeFailure(DecodeFailure),

    #[error("empty sample set")]
    EmptySamples,
}

/// Reason a trellis pass produced no usable probability mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeFailure {
    /// A received length implies a final drift outside the decoder's drift window.
    DriftOverflow,
    /// All mass vanished at some trellis step.
    ZeroMass { step: usize },
}

impl std::fmt::Display for DecodeFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecodeFailure::DriftOverflow => write!(f, "final drift outside the drift window"),
            DecodeFailure::ZeroMass { step } => write!(f, "zero probability mass at step {step}"),
        }
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
