//! Small 64-bit tensor library with reverse-mode differentiation, limited
//! to the layers a temporal convolutional autoencoder needs.

pub mod adam;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod layers;
pub mod params;
pub mod tensor;

pub use adam::{adam_step, AdamState};
pub use error::{NnError, Result};
pub use graph::{Gradients, Graph, Var};
pub use layers::{Conv1d, Dense, TcnBlock, TcnSpec};
pub use params::{ParamId, ParamSet};
pub use tensor::Tensor;
