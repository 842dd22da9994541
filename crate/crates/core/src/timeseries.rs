//! Uniformly sampled scalar series, normalization, windowing and
//! autocorrelation-time estimation.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// A uniformly sampled scalar signal.
///
/// Values are always finite and `dt` is strictly positive; both are checked
/// on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt: f64,
    label: String,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, dt: f64, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooShort("time series must have at least one value".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            values,
            dt,
            label: label.into(),
        })
    }

    /// Unit sampling interval, the convention for maps.
    pub fn from_values(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        Self::new(values, 1.0, label)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Same sampling and label, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.dt, self.label.clone())
    }

    /// Contiguous sub-series `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidParameter(format!(
                "slice [{start}, {end}) out of range for length {}",
                self.len()
            )));
        }
        self.with_values(self.values[start..end].to_vec())
    }

    pub fn mean(&self) -> f64 {
        stats::mean(&self.values)
    }

    pub fn std(&self) -> f64 {
        stats::sample_std(&self.values)
    }
}

/// Scale to zero sample mean and unit sample (n − 1) standard deviation.
pub fn zscore(ts: &TimeSeries) -> Result<TimeSeries> {
    if ts.len() < 2 {
        return Err(Error::TooShort("zscore needs at least two values".into()));
    }
    let m = ts.mean();
    let s = ts.std();
    if s <= 0.0 || !s.is_finite() {
        return Err(Error::ZeroVariance);
    }
    ts.with_values(ts.values.iter().map(|v| (v - m) / s).collect())
}

/// Normalized autocorrelation function for lags `0..=max_lag`, computed via
/// a zero-padded FFT.
pub fn autocorrelation(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    let m = stats::mean(values);
    let padded = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .map(|v| Complex::new(v - m, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(padded)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(padded).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(padded).process(&mut buf);
    let r0 = buf[0].re;
    if r0 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(buf
        .iter()
        .take(max_lag.min(n - 1) + 1)
        .map(|c| c.re / r0)
        .collect())
}

/// Smallest lag at which the normalized autocorrelation falls below 1/e.
///
/// The search is capped at `length / 4`; series that never decorrelate
/// within the cap (e.g. a pure sine) return the cap.
pub fn autocorrelation_time(ts: &TimeSeries) -> Result<usize> {
    if ts.len() < 100 {
        return Err(Error::TooShort(format!(
            "autocorrelation time needs at least 100 values, got {}",
            ts.len()
        )));
    }
    let cap = ts.len() / 4;
    let acf = autocorrelation(ts.values(), cap)?;
    let threshold = (-1.0f64).exp();
    Ok(acf
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, &r)| r < threshold)
        .map(|(k, _)| k)
        .unwrap_or(cap))
}

/// Paired fixed-length windows: `inputs[i]` starts at `starts[i]`,
/// `targets[i]` starts `lag` steps later.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub starts: Vec<usize>,
    pub seq_length: usize,
    pub lag: usize,
}

impl SequenceSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Number of windows `make_sequences` produces for the given geometry.
pub fn sequence_count(length: usize, seq_length: usize, lag: usize, stride: usize) -> usize {
    if seq_length + lag > length || stride == 0 {
        return 0;
    }
    (length - seq_length - lag) / stride + 1
}

/// Cut `ts_in` into windows of `seq_length` and pair each with the window of
/// `ts_target` shifted forward by `lag`.
pub fn make_sequences(
    ts_in: &TimeSeries,
    ts_target: &TimeSeries,
    seq_length: usize,
    lag: usize,
    stride: usize,
) -> Result<SequenceSet> {
    if ts_in.len() != ts_target.len() {
        return Err(Error::Incompatible(format!(
            "input length {} != target length {}",
            ts_in.len(),
            ts_target.len()
        )));
    }
    if seq_length == 0 || lag == 0 || stride == 0 {
        return Err(Error::InvalidParameter(
            "seq_length, lag and stride must be positive".into(),
        ));
    }
    if seq_length + lag > ts_in.len() {
        return Err(Error::TooShort(format!(
            "seq_length {seq_length} + lag {lag} exceeds length {}",
            ts_in.len()
        )));
    }
    let count = sequence_count(ts_in.len(), seq_length, lag, stride);
    let starts: Vec<usize> = (0..count).map(|i| i * stride).collect();
    let x = ts_in.values();
    let y = ts_target.values();
    Ok(SequenceSet {
        inputs: starts.iter().map(|&s| x[s..s + seq_length].to_vec()).collect(),
        targets: starts
            .iter()
            .map(|&s| y[s + lag..s + lag + seq_length].to_vec())
            .collect(),
        starts,
        seq_length,
        lag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn ar1(phi: f64, n: usize, seed: u64) -> TimeSeries {
        let mut rng = seeded_rng(seed);
        let mut v = Vec::with_capacity(n);
        let mut x = 0.0;
        for _ in 0..n {
            x = phi * x + rng.sample::<f64, _>(StandardNormal);
            v.push(x);
        }
        TimeSeries::from_values(v, "ar1").unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(
            TimeSeries::new(vec![1.0, f64::NAN], 1.0, "x"),
            Err(Error::NonFinite(1))
        ));
        assert!(TimeSeries::new(vec![1.0], 0.0, "x").is_err());
        assert!(TimeSeries::new(vec![], 1.0, "x").is_err());
    }

    #[test]
    fn zscore_three_points() {
        let ts = TimeSeries::from_values(vec![1.0, 2.0, 3.0], "x").unwrap();
        assert_eq!(zscore(&ts).unwrap().values(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn zscore_constant_is_error() {
        let ts = TimeSeries::from_values(vec![5.0, 5.0, 5.0], "x").unwrap();
        assert_eq!(zscore(&ts), Err(Error::ZeroVariance));
    }

    #[test]
    fn zscore_ar1_moments() {
        let z = zscore(&ar1(0.5, 10_000, 1)).unwrap();
        assert!(z.mean().abs() < 1e-9);
        assert!((z.std() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn act_white_noise_is_one() {
        assert_eq!(autocorrelation_time(&ar1(0.0, 100_000, 2)).unwrap(), 1);
    }

    #[test]
    fn act_ar1_matches_analytic() {
        // rho(k) = 0.9^k drops below 1/e at k = ceil(-1/ln 0.9) = 10.
        let expected = (-1.0 / 0.9f64.ln()).ceil() as i64;
        let got = autocorrelation_time(&ar1(0.9, 100_000, 3)).unwrap() as i64;
        assert!((got - expected).abs() <= 2, "got {got}, expected {expected}");
    }

    #[test]
    fn act_capped_at_quarter_length() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.001).sin()).collect();
        let ts = TimeSeries::from_values(v, "sine").unwrap();
        let act = autocorrelation_time(&ts).unwrap();
        assert!((100..=250).contains(&act), "{act}");
        let v: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { 0.9 }).collect();
        let ts = TimeSeries::from_values(v, "alt").unwrap();
        assert_eq!(autocorrelation_time(&ts).unwrap(), 1);
    }

    #[test]
    fn act_too_short() {
        let ts = TimeSeries::from_values(vec![1.0; 50], "x").unwrap();
        assert!(matches!(autocorrelation_time(&ts), Err(Error::TooShort(_))));
    }

    #[test]
    fn sequence_counts() {
        let ramp = TimeSeries::from_values((0..100).map(f64::from).collect(), "r").unwrap();
        assert_eq!(make_sequences(&ramp, &ramp, 10, 5, 1).unwrap().len(), 86);
        assert_eq!(make_sequences(&ramp, &ramp, 10, 5, 85).unwrap().len(), 2);
    }

    #[test]
    fn targets_are_shifted_inputs() {
        let ramp = TimeSeries::from_values((0..100).map(f64::from).collect(), "r").unwrap();
        let set = make_sequences(&ramp, &ramp, 10, 5, 3).unwrap();
        for ((inp, tgt), &s) in set.inputs.iter().zip(&set.targets).zip(&set.starts) {
            for j in 0..10 {
                assert_eq!(inp[j], (s + j) as f64);
                assert_eq!(tgt[j], (s + j + 5) as f64);
            }
        }
    }

    #[test]
    fn make_sequences_errors() {
        let a = TimeSeries::from_values(vec![0.0; 20], "a").unwrap();
        let b = TimeSeries::from_values(vec![0.0; 21], "b").unwrap();
        assert!(matches!(make_sequences(&a, &b, 5, 1, 1), Err(Error::Incompatible(_))));
        assert!(matches!(make_sequences(&a, &a, 15, 6, 1), Err(Error::TooShort(_))));
    }

    proptest! {
        #[test]
        fn zscore_idempotent(v in prop::collection::vec(-1e3f64..1e3, 3..200)) {
            let ts = TimeSeries::from_values(v, "p").unwrap();
            prop_assume!(ts.std() > 1e-6);
            let once = zscore(&ts).unwrap();
            let twice = zscore(&once).unwrap();
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn window_starts_step_by_stride(stride in 1usize..40, seq in 1usize..20, lag in 1usize..20) {
            let ramp = TimeSeries::from_values((0..100).map(f64::from).collect(), "r").unwrap();
            let set = make_sequences(&ramp, &ramp, seq, lag, stride).unwrap();
            prop_assert_eq!(set.len(), (100 - seq - lag) / stride + 1);
            for (i, w) in set.inputs.iter().enumerate() {
                prop_assert_eq!(w[0], (i * stride) as f64);
            }
        }

        #[test]
        fn act_invariant_under_zscore(seed in 0u64..50, phi in 0.0f64..0.95) {
            let ts = ar1(phi, 2000, seed);
            prop_assert_eq!(
                autocorrelation_time(&ts).unwrap(),
                autocorrelation_time(&zscore(&ts).unwrap()).unwrap()
            );
        }
    }
}
