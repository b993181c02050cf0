use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index out of range: j + k = {sum} exceeds d = {d}")]
    IndexOutOfRange { sum: usize, d: usize },
    #[error("sequence is not d-monotone")]
    NotDMonotone,
    #[error("sequence has a non-positive entry at index {0}")]
    NonPositiveEntry(usize),
    #[error("unsupported law: {0}")]
    UnsupportedLaw(String),
    #[error("dimension {d} exceeds the cap of {cap}")]
    DimensionCap { d: usize, cap: usize },
    #[error("parameterization requires an exchangeable specification")]
    NotExchangeable,
    #[error("series truncation horizon overflow at t = {0}")]
    TruncationOverflow(f64),
    #[error("non-monotone conditional survival detected: {0}")]
    NonMonotoneConditional(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
