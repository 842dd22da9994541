//! Transfer entropy with a binned plug-in estimator.
//!
//! Each series is discretized into equal-occupancy (quantile) bins, joint
//! histories are counted, and
//!
//! ```text
//! TE(src → tgt) = H(tgt_t | tgt_past) − H(tgt_t | tgt_past, src_past)
//! ```
//!
//! is evaluated in nats. The bias of the plug-in estimate is removed by
//! subtracting the mean TE over sources whose binned values were shuffled
//! in time.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{derive_seed, mean, sample_std, seeded_rng};
use crate::timeseries::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeConfig {
    /// Past samples of each variable in the conditioning set.
    pub history: usize,
    /// Quantile bins per dimension.
    pub bins: usize,
    /// Source shuffles used for bias correction (0 disables it).
    pub n_shuffles: usize,
    pub seed: u64,
}

impl Default for TeConfig {
    fn default() -> Self {
        Self {
            history: 1,
            bins: 8,
            n_shuffles: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeEstimate {
    /// Bias-corrected TE, floored at zero.
    pub value: f64,
    pub uncorrected: f64,
    pub shuffle_mean: f64,
    /// Sample std of the shuffled-source estimates (0 without shuffles).
    pub shuffle_std: f64,
    /// Fewer than 10 samples per joint-histogram cell on average.
    pub undersampled: bool,
}

/// Equal-occupancy bin labels in `0..bins`, by rank (ties broken by time
/// index, so any strictly increasing transform gives the same labels).
pub fn quantile_bins(values: &[f64], bins: usize) -> Vec<u32> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut labels = vec![0u32; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = (rank * bins / n) as u32;
    }
    labels
}

fn entropy_from_counts<I: Iterator<Item = usize>>(counts: I, total: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Plug-in TE from binned series, in nats.
fn binned_te(source: &[u32], target: &[u32], k: usize, bins: usize) -> f64 {
    let n = target.len();
    let b = bins as u64;
    let mut past_t: BTreeMap<u64, usize> = BTreeMap::new();
    let mut next_past_t: BTreeMap<u64, usize> = BTreeMap::new();
    let mut past_ts: BTreeMap<u64, usize> = BTreeMap::new();
    let mut next_past_ts: BTreeMap<u64, usize> = BTreeMap::new();
    for t in k..n {
        let mut yp = 0u64;
        let mut xp = 0u64;
        for i in 1..=k {
            yp = yp * b + target[t - i] as u64;
            xp = xp * b + source[t - i] as u64;
        }
        let bk = b.pow(k as u32);
        let joint_past = yp * bk + xp;
        let nxt = target[t] as u64;
        *past_t.entry(yp).or_default() += 1;
        *next_past_t.entry(nxt * bk + yp).or_default() += 1;
        *past_ts.entry(joint_past).or_default() += 1;
        *next_past_ts.entry(nxt * bk * bk + joint_past).or_default() += 1;
    }
    let total = (n - k) as f64;
    let h = |m: &BTreeMap<u64, usize>| entropy_from_counts(m.values().copied(), total);
    // H(next | past) − H(next | past, src) with H(a|b) = H(a,b) − H(b).
    (h(&next_past_t) - h(&past_t)) - (h(&next_past_ts) - h(&past_ts))
}

/// Transfer entropy from `source` to `target` in nats.
pub fn transfer_entropy(source: &TimeSeries, target: &TimeSeries, cfg: &TeConfig) -> Result<TeEstimate> {
    if source.len() != target.len() {
        return Err(Error::Incompatible(format!(
            "source length {} != target length {}",
            source.len(),
            target.len()
        )));
    }
    if cfg.history == 0 || cfg.bins < 2 {
        return Err(Error::InvalidParameter("history must be >= 1 and bins >= 2".into()));
    }
    let dims = 2 * cfg.history as u32 + 1;
    let cells = (cfg.bins as f64).powi(dims as i32);
    if cells > u64::MAX as f64 / 4.0 {
        return Err(Error::InvalidParameter("history/bins combination too large".into()));
    }
    if source.len() <= cfg.history + 1 {
        return Err(Error::TooShort(format!(
            "length {} too short for history {}",
            source.len(),
            cfg.history
        )));
    }
    for s in [source, target] {
        let v = s.values();
        if v.iter().all(|&a| a == v[0]) {
            return Err(Error::ZeroVariance);
        }
    }
    let undersampled = (source.len() as f64) < 10.0 * cells;
    let src = quantile_bins(source.values(), cfg.bins);
    let tgt = quantile_bins(target.values(), cfg.bins);
    let uncorrected = binned_te(&src, &tgt, cfg.history, cfg.bins);

    let mut rng = seeded_rng(derive_seed(cfg.seed, 0x7e));
    let mut shuffled = src.clone();
    let null: Vec<f64> = (0..cfg.n_shuffles)
        .map(|_| {
            shuffled.shuffle(&mut rng);
            binned_te(&shuffled, &tgt, cfg.history, cfg.bins)
        })
        .collect();
    let shuffle_mean = if null.is_empty() { 0.0 } else { mean(&null) };
    let shuffle_std = if null.len() > 1 { sample_std(&null) } else { 0.0 };
    Ok(TeEstimate {
        value: (uncorrected - shuffle_mean).max(0.0),
        uncorrected,
        shuffle_mean,
        shuffle_std,
        undersampled,
    })
}

/// `(TE x→y, TE y→x)` with identical settings.
pub fn te_pair(x: &TimeSeries, y: &TimeSeries, cfg: &TeConfig) -> Result<(TeEstimate, TeEstimate)> {
    Ok((transfer_entropy(x, y, cfg)?, transfer_entropy(y, x, cfg)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::seeded_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn noise(n: usize, seed: u64) -> TimeSeries {
        let mut rng = seeded_rng(seed);
        TimeSeries::from_values((0..n).map(|_| rng.sample(StandardNormal)).collect(), "n").unwrap()
    }

    #[test]
    fn quantile_bins_equal_occupancy() {
        let v: Vec<f64> = (0..80).map(|i| ((i * 37) % 80) as f64).collect();
        let b = quantile_bins(&v, 8);
        for k in 0..8 {
            assert_eq!(b.iter().filter(|&&l| l == k).count(), 10);
        }
    }

    #[test]
    fn independent_noise_has_no_transfer() {
        let x = noise(100_000, 1);
        let y = noise(100_000, 2);
        let te = transfer_entropy(&x, &y, &TeConfig::default()).unwrap();
        assert!(te.value < 0.01, "{te:?}");
        assert!(te.shuffle_mean > 0.0);
        assert!(te.value <= te.uncorrected);
    }

    #[test]
    fn copy_channel_transfers_marginal_entropy() {
        let x = noise(100_000, 3);
        let mut yv = vec![0.0];
        yv.extend_from_slice(&x.values()[..99_999]);
        let y = TimeSeries::from_values(yv, "y").unwrap();
        let te = transfer_entropy(&x, &y, &TeConfig::default()).unwrap();
        let ln_b = 8f64.ln();
        assert!((te.value - ln_b).abs() / ln_b < 0.1, "{te:?}");
    }

    #[test]
    fn symmetric_inputs_give_equal_directions() {
        let x = noise(5_000, 4);
        let (a, b) = te_pair(&x, &x, &TeConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invariant_under_monotone_transform() {
        let x = noise(20_000, 5);
        let mut rng = seeded_rng(6);
        let mut yv = vec![0.0; 20_000];
        for t in 1..20_000 {
            yv[t] = 0.5 * yv[t - 1] + x.values()[t - 1] + rng.sample::<f64, _>(StandardNormal);
        }
        let y = TimeSeries::from_values(yv, "y").unwrap();
        let cfg = TeConfig::default();
        let base = transfer_entropy(&x, &y, &cfg).unwrap();
        let xt = x.with_values(x.values().iter().map(|v| v.exp()).collect()).unwrap();
        let yt = y.with_values(y.values().iter().map(|v| v * v * v + 2.0 * v).collect()).unwrap();
        assert_eq!(transfer_entropy(&xt, &yt, &cfg).unwrap(), base);
    }

    #[test]
    fn uncorrected_is_nonnegative() {
        for seed in 0..5 {
            let x = noise(2_000, seed);
            let y = noise(2_000, seed + 100);
            let cfg = TeConfig { n_shuffles: 0, ..TeConfig::default() };
            assert!(transfer_entropy(&x, &y, &cfg).unwrap().uncorrected >= -1e-12);
        }
    }

    #[test]
    fn flags_and_errors() {
        let x = noise(1_000, 7);
        let y = noise(1_000, 8);
        let cfg = TeConfig { history: 2, ..TeConfig::default() };
        assert!(transfer_entropy(&x, &y, &cfg).unwrap().undersampled);
        let c = TimeSeries::from_values(vec![1.0; 1_000], "c").unwrap();
        assert_eq!(transfer_entropy(&x, &c, &TeConfig::default()), Err(Error::ZeroVariance));
        let short = x.slice(0, 500).unwrap();
        assert!(matches!(transfer_entropy(&short, &y, &TeConfig::default()), Err(Error::Incompatible(_))));
    }
}
