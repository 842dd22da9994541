//! Surrogate series that destroy temporal contingency with a partner
//! series while keeping selected statistics.

use rand::Rng;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::seeded_rng;
use crate::timeseries::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    /// i.i.d. draws from U(0, 1).
    #[default]
    UniformRandom,
    /// Random Fourier phases with the amplitude spectrum kept.
    FourierPhase,
}

/// `length` i.i.d. values in `[0, 1)`.
pub fn uniform_surrogate(length: usize, seed: u64) -> Result<TimeSeries> {
    if length == 0 {
        return Err(Error::TooShort("surrogate length must be at least 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let v = (0..length).map(|_| rng.random::<f64>()).collect();
    TimeSeries::from_values(v, "uniform_surrogate")
}

/// Phase-randomized surrogate with the same amplitude spectrum.
///
/// The DC bin (and the Nyquist bin for even lengths) keep their phase, the
/// remaining positive-frequency bins get uniform random phases and the
/// negative frequencies are set to their conjugates so the inverse is real.
pub fn fourier_surrogate(ts: &TimeSeries, seed: u64) -> Result<TimeSeries> {
    let n = ts.len();
    if n < 4 {
        return Err(Error::TooShort(format!(
            "Fourier surrogate needs at least 4 values, got {n}"
        )));
    }
    let mut planner = FftPlanner::new();
    let mut spec: Vec<Complex<f64>> = ts.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spec);

    let mut rng = seeded_rng(seed);
    let half = (n - 1) / 2;
    for k in 1..=half {
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let c = Complex::from_polar(spec[k].norm(), phi);
        spec[k] = c;
        spec[n - k] = c.conj();
    }
    planner.plan_fft_inverse(n).process(&mut spec);
    let scale = 1.0 / n as f64;
    let values = spec.iter().map(|c| c.re * scale).collect();
    Ok(ts.with_values(values)?.with_label(format!("{}_fourier_surrogate", ts.label())))
}

/// Surrogate of `ts` of the requested kind, keeping `dt` and the label stem.
pub fn make_surrogate(ts: &TimeSeries, kind: SurrogateKind, seed: u64) -> Result<TimeSeries> {
    match kind {
        SurrogateKind::UniformRandom => {
            let u = uniform_surrogate(ts.len(), seed)?;
            TimeSeries::new(u.into_values(), ts.dt(), format!("{}_surrogate", ts.label()))
        }
        SurrogateKind::FourierPhase => fourier_surrogate(ts, seed),
    }
}
