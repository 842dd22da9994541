use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaciError {
    #[error("invalid TACI configuration: {0}")]
    ConfigInvalid(String),
    #[error("training diverged (non-finite loss) in epoch {epoch} of the {network} network")]
    Diverged { network: String, epoch: usize },
    #[error(transparent)]
    Data(#[from] csgi_core::Error),
    #[error(transparent)]
    Nn(#[from] csgi_nn::NnError),
    #[error("model manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TaciError>;
