use std::path::PathBuf;

use thiserror::Error;

use csgi_taci::TaciError;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Invalid experiment config; `location` names the line/column or field.
    #[error("config error in {location}: {message}")]
    Config { location: String, message: String },
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("non-uniform sampling at row {row}: gap {gap}s exceeds tolerance {tolerance}s")]
    NonUniformSampling { row: usize, gap: f64, tolerance: f64 },
    #[error("channel {0} missing from pairwise results")]
    MissingChannel(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0}")]
    Data(String),
    #[error("numerical divergence: {0}")]
    Diverged(String),
    #[error(transparent)]
    Core(csgi_core::Error),
    #[error(transparent)]
    Taci(TaciError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, PipelineError>;

impl PipelineError {
    pub fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        PipelineError::Config { location: location.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.into(), source }
    }

    /// Process exit code: 2 config, 3 data, 4 numerical divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config { .. } => 2,
            PipelineError::Taci(TaciError::ConfigInvalid(_)) => 2,
            PipelineError::Diverged(_) => 4,
            PipelineError::Core(csgi_core::Error::Diverged { .. }) => 4,
            PipelineError::Taci(TaciError::Diverged { .. }) => 4,
            PipelineError::Taci(TaciError::Data(csgi_core::Error::Diverged { .. })) => 4,
            _ => 3,
        }
    }
}

impl From<csgi_core::Error> for PipelineError {
    fn from(e: csgi_core::Error) -> Self {
        PipelineError::Core(e)
    }
}

impl From<TaciError> for PipelineError {
    fn from(e: TaciError) -> Self {
        PipelineError::Taci(e)
    }
}

impl From<csv::Error> for PipelineError {
    fn from(e: csv::Error) -> Self {
        PipelineError::Data(format!("csv: {e}"))
    }
}
