use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid samples-per-period {n} for {scheme}: {reason}")]
    InvalidSampleCount {
        scheme: &'static str,
        n: usize,
        reason: &'static str,
    },
    #[error("symbol {symbol} outside label set 1..={alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error("invalid carrier configuration: {0}")]
    InvalidCarrier(String),
    #[error("invalid channel configuration: {0}")]
    InvalidChannel(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("scheme mismatch: model is {expected}, data is {actual}")]
    SchemeMismatch {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },
    #[error("unsupported format version {found:?} (expected {expected:?})")]
    VersionMismatch { expected: String, found: String },
    #[error("training failed: {0}")]
    TrainingFailure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable identifier for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSampleCount { .. } => "invalid_n",
            Error::SymbolOutOfRange { .. } => "symbol_range",
            Error::InvalidCarrier(_) => "invalid_carrier",
            Error::InvalidChannel(_) => "invalid_channel",
            Error::Degenerate(_) => "degenerate",
            Error::DimensionMismatch { .. } => "dimension",
            Error::Shape(_) => "shape",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SchemeMismatch { .. } => "scheme_mismatch",
            Error::Parse { .. } => "parse",
            Error::VersionMismatch { .. } => "version",
            Error::TrainingFailure(_) => "training_failure",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
