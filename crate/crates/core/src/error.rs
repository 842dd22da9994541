use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("input too short: {0}")]
    TooShort(String),
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("trajectory diverged at step {step}")]
    Diverged { step: usize },
    #[error("csv error: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
