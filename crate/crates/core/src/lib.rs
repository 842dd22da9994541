//! Time-varying causal coupling between pairs of time series.
//!
//! This crate holds everything except the neural predictor: the
//! [`TimeSeries`] type, benchmark simulators ([`dynsys`]), surrogate
//! generation, CSGI scoring over rolling windows ([`metrics`]) and the
//! linear Granger ([`slgc`]), cross-mapping ([`ccm`]) and transfer-entropy
//! ([`te`]) baselines.

pub mod ccm;
pub mod dynsys;
pub mod error;
pub mod metrics;
pub mod slgc;
pub mod stats;
pub mod surrogate;
pub mod te;
pub mod timeseries;

pub use error::{Error, Result};
pub use metrics::{csgi, r_squared, CsgiTimecourse, WindowScores};
pub use surrogate::SurrogateKind;
pub use timeseries::TimeSeries;
