//! Temporal autoencoders for causal inference.
//!
//! For a pair `(x, y)` four networks are trained once on the whole series:
//! `(x, y) → y`, `(x⁽ˢ⁾, y) → y`, `(y, x) → x` and `(y⁽ˢ⁾, x) → x`, where
//! `⁽ˢ⁾` marks a surrogate that replaces the candidate driver. Rolling-window
//! R² of the full and surrogate predictions is then turned into CSGI
//! timecourses for both directions.

pub mod config;
pub mod error;
pub mod eval;
pub mod model;
pub mod store;
pub mod train;

pub use config::TaciConfig;
pub use error::{Result, TaciError};
pub use eval::{evaluate_pair, predict_pair, DirectionPredictions};
pub use model::TaciNet;
pub use store::{load_model_set, save_model_set};
pub use train::{train_pair, NetworkRole, TaciModelSet, TrainingHistory};
