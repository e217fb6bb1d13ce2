use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable name `{0}` is already in use")]
    DuplicateVariable(String),

    #[error("variable sets overlap on `{0}`")]
    OverlappingVariables(String),

    #[error("empty variable selection")]
    EmptySelection,

    #[error("invalid alphabet `{name}`: {reason}")]
    InvalidAlphabet { name: String, reason: String },

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("conditioning event {var} = {value} has zero probability")]
    ZeroProbability { var: String, value: String },

    #[error("symbol {0} is not in the alphabet")]
    UnknownSymbol(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("internal consistency error: {measure} evaluated to {value:e} bits")]
    NegativeMeasure { measure: String, value: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("symbol {symbol} has zero count in context {context}")]
    ModelCoverage { context: usize, symbol: i64 },

    #[error("bitstream format error: {0}")]
    Format(String),

    #[error("bitstream integrity error: {0}")]
    Integrity(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
