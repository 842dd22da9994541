//! Experiment plumbing around the causal-inference crates: TOML experiment
//! configs, coupling sweeps with CSV/SVG output and reproducibility
//! manifests, CSV ingestion of recorded data, channel-group averaging and
//! the relative-humidity sanity utility.

pub mod config;
pub mod error;
pub mod groups;
pub mod humidity;
pub mod ingest;
pub mod svg;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{PipelineError, Result};
pub use groups::{group_average, ChannelGroups, PairwiseResults};
pub use humidity::rh_from_t_tdew;
pub use ingest::{ingest_csv, Dataset, IngestOptions, SentinelPolicy};
pub use sweep::{run_sweep, SweepOutcome};
