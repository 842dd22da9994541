//! Causal scoring: explained variance, EGCI, CSGI, bootstrap timecourses
//! over rolling windows, and directionality.
//!
//! A CSGI value `chi` compares the explained variance of a predictor fed
//! the real driver against one fed a surrogate driver:
//!
//! ```text
//! chi = (R2_full - R2_surr) / (0.5 * (R2_full + R2_surr))
//! ```
//!
//! Both R² are floored at zero first, so `chi` lies in `[-2, 2]`, and a
//! pair of non-predictive models (both below 1e-12) scores exactly zero.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{mean, sample_std, stream_rng};

/// Floored R² values below this count as "no explained variance".
pub const CSGI_DEGENERATE_EPS: f64 = 1e-12;

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r_squared(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::Incompatible(format!(
            "{} predictions for {} observations",
            predicted.len(),
            actual.len()
        )));
    }
    if actual.len() < 2 {
        return Err(Error::TooShort("r_squared needs at least two points".into()));
    }
    let m = mean(actual);
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (p, a) in predicted.iter().zip(actual) {
        ss_res += (a - p) * (a - p);
        ss_tot += (a - m) * (a - m);
    }
    if ss_tot <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Comparative Surrogate Granger Index from two explained variances.
pub fn csgi(r2_full: f64, r2_surrogate: f64) -> f64 {
    let f = r2_full.max(0.0);
    let s = r2_surrogate.max(0.0);
    if f < CSGI_DEGENERATE_EPS && s < CSGI_DEGENERATE_EPS {
        return 0.0;
    }
    (f - s) / (0.5 * (f + s))
}

/// Extended Granger Causality Index: relative reduction in residual variance.
pub fn egci(var_resid_joint: f64, var_resid_self: f64) -> Result<f64> {
    if var_resid_self <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    if var_resid_joint < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "residual variance must be >= 0, got {var_resid_joint}"
        )));
    }
    Ok(1.0 - var_resid_joint / var_resid_self)
}

pub fn directionality(chi_xy: f64, chi_yx: f64) -> f64 {
    chi_xy - chi_yx
}

/// Per-window bootstrap CSGI for one causal direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowScores {
    pub window_starts: Vec<usize>,
    pub chi: Vec<f64>,
    pub std: Vec<f64>,
    pub n_bootstrap: usize,
}

impl WindowScores {
    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    /// Time-averaged CSGI.
    pub fn mean(&self) -> f64 {
        mean(&self.chi)
    }

    /// Root-mean-square of the per-window bootstrap deviations.
    pub fn pooled_std(&self) -> f64 {
        (self.std.iter().map(|s| s * s).sum::<f64>() / self.std.len() as f64).sqrt()
    }

    /// Windows whose start lies in `[start, end)`.
    pub fn select(&self, start: usize, end: usize) -> WindowScores {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| self.window_starts[i] >= start && self.window_starts[i] < end)
            .collect();
        WindowScores {
            window_starts: idx.iter().map(|&i| self.window_starts[i]).collect(),
            chi: idx.iter().map(|&i| self.chi[i]).collect(),
            std: idx.iter().map(|&i| self.std[i]).collect(),
            n_bootstrap: self.n_bootstrap,
        }
    }

    /// Shift window starts by `offset` (e.g. to original-series indices).
    pub fn offset(mut self, offset: usize) -> Self {
        for s in &mut self.window_starts {
            *s += offset;
        }
        self
    }
}

/// Bootstrap CSGI over rolling windows.
///
/// For each window, `n_bootstrap` resamples of the window's time indices are
/// drawn with replacement; the same index multiset scores both predictors.
/// A resample whose actual values are constant contributes `chi = 0`. The
/// reported spread is the (n − 1) sample standard deviation over resamples,
/// zero when `n_bootstrap == 1`. Window `w` uses random stream `w` of
/// `seed`, so results do not depend on evaluation order.
pub fn rolling_csgi(
    pred_full: &[f64],
    pred_surr: &[f64],
    actual: &[f64],
    window_len: usize,
    stride: usize,
    n_bootstrap: usize,
    seed: u64,
) -> Result<WindowScores> {
    if pred_full.len() != actual.len() || pred_surr.len() != actual.len() {
        return Err(Error::Incompatible("prediction and actual lengths differ".into()));
    }
    if window_len < 10 {
        return Err(Error::InvalidParameter(format!("window_len must be >= 10, got {window_len}")));
    }
    if n_bootstrap == 0 || stride == 0 {
        return Err(Error::InvalidParameter("n_bootstrap and stride must be >= 1".into()));
    }
    if actual.len() < window_len {
        return Err(Error::TooShort(format!(
            "series of length {} shorter than window {window_len}",
            actual.len()
        )));
    }
    let n_windows = (actual.len() - window_len) / stride + 1;
    let mut out = WindowScores {
        window_starts: Vec::with_capacity(n_windows),
        chi: Vec::with_capacity(n_windows),
        std: Vec::with_capacity(n_windows),
        n_bootstrap,
    };
    let mut idx = vec![0usize; window_len];
    let mut scores = vec![0.0; n_bootstrap];
    for w in 0..n_windows {
        let start = w * stride;
        let af = &pred_full[start..start + window_len];
        let asur = &pred_surr[start..start + window_len];
        let act = &actual[start..start + window_len];
        let mut rng = stream_rng(seed, w as u64);
        for score in scores.iter_mut() {
            for i in idx.iter_mut() {
                *i = rng.random_range(0..window_len);
            }
            *score = resampled_csgi(af, asur, act, &idx);
        }
        out.window_starts.push(start);
        out.chi.push(mean(&scores));
        out.std.push(if n_bootstrap > 1 { sample_std(&scores) } else { 0.0 });
    }
    Ok(out)
}

fn resampled_csgi(full: &[f64], surr: &[f64], actual: &[f64], idx: &[usize]) -> f64 {
    let m = idx.iter().map(|&i| actual[i]).sum::<f64>() / idx.len() as f64;
    let (mut ss_f, mut ss_s, mut ss_t) = (0.0, 0.0, 0.0);
    for &i in idx {
        let a = actual[i];
        ss_f += (a - full[i]) * (a - full[i]);
        ss_s += (a - surr[i]) * (a - surr[i]);
        ss_t += (a - m) * (a - m);
    }
    if ss_t <= 0.0 {
        return 0.0;
    }
    csgi(1.0 - ss_f / ss_t, 1.0 - ss_s / ss_t)
}

/// Both directions of a pair over the same windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsgiTimecourse {
    pub window_starts: Vec<usize>,
    pub chi_xy: Vec<f64>,
    pub std_xy: Vec<f64>,
    pub chi_yx: Vec<f64>,
    pub std_yx: Vec<f64>,
    pub n_bootstrap: usize,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    window_start: usize,
    chi_xy: f64,
    std_xy: f64,
    chi_yx: f64,
    std_yx: f64,
}

impl CsgiTimecourse {
    pub fn from_directions(xy: WindowScores, yx: WindowScores) -> Result<Self> {
        if xy.window_starts != yx.window_starts || xy.n_bootstrap != yx.n_bootstrap {
            return Err(Error::Incompatible("directions use different windows".into()));
        }
        Ok(Self {
            window_starts: xy.window_starts,
            chi_xy: xy.chi,
            std_xy: xy.std,
            chi_yx: yx.chi,
            std_yx: yx.std,
            n_bootstrap: xy.n_bootstrap,
        })
    }

    pub fn len(&self) -> usize {
        self.window_starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window_starts.is_empty()
    }

    pub fn xy(&self) -> WindowScores {
        WindowScores {
            window_starts: self.window_starts.clone(),
            chi: self.chi_xy.clone(),
            std: self.std_xy.clone(),
            n_bootstrap: self.n_bootstrap,
        }
    }

    pub fn yx(&self) -> WindowScores {
        WindowScores {
            window_starts: self.window_starts.clone(),
            chi: self.chi_yx.clone(),
            std: self.std_yx.clone(),
            n_bootstrap: self.n_bootstrap,
        }
    }

    /// Swap the roles of x and y.
    pub fn swapped(&self) -> Self {
        Self {
            window_starts: self.window_starts.clone(),
            chi_xy: self.chi_yx.clone(),
            std_xy: self.std_yx.clone(),
            chi_yx: self.chi_xy.clone(),
            std_yx: self.std_xy.clone(),
            n_bootstrap: self.n_bootstrap,
        }
    }

    /// Per-window `chi_xy − chi_yx`.
    pub fn directionality(&self) -> Vec<f64> {
        self.chi_xy
            .iter()
            .zip(&self.chi_yx)
            .map(|(a, b)| directionality(*a, *b))
            .collect()
    }

    /// CSV with columns `window_start, chi_xy, std_xy, chi_yx, std_yx`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for i in 0..self.len() {
            wtr.serialize(CsvRow {
                window_start: self.window_starts[i],
                chi_xy: self.chi_xy[i],
                std_xy: self.std_xy[i],
                chi_yx: self.chi_yx[i],
                std_yx: self.std_yx[i],
            })?;
        }
        wtr.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }

    /// Parse the CSV written by [`write_csv`](Self::write_csv). The
    /// bootstrap count is not part of the file and must be supplied.
    pub fn read_csv<R: Read>(r: R, n_bootstrap: usize) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut tc = Self {
            window_starts: vec![],
            chi_xy: vec![],
            std_xy: vec![],
            chi_yx: vec![],
            std_yx: vec![],
            n_bootstrap,
        };
        for row in rdr.deserialize() {
            let row: CsvRow = row?;
            tc.window_starts.push(row.window_start);
            tc.chi_xy.push(row.chi_xy);
            tc.std_xy.push(row.std_xy);
            tc.chi_yx.push(row.chi_yx);
            tc.std_yx.push(row.std_yx);
        }
        Ok(tc)
    }
}

/// Antisymmetric matrix of directionality between labelled regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalityMatrix {
    pub regions: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl DirectionalityMatrix {
    /// From a square matrix of mean CSGI where `chi[i][j]` scores `i → j`.
    pub fn from_chi(regions: Vec<String>, chi: &[Vec<f64>]) -> Result<Self> {
        let n = regions.len();
        if chi.len() != n || chi.iter().any(|r| r.len() != n) {
            return Err(Error::Incompatible("chi matrix must be square over the regions".into()));
        }
        let values = (0..n)
            .map(|i| (0..n).map(|j| directionality(chi[i][j], chi[j][i])).collect())
            .collect();
        Ok(Self { regions, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn r_squared_cases() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(r_squared(&a, &a).unwrap(), 1.0);
        assert_eq!(r_squared(&[2.5; 4], &a).unwrap(), 0.0);
        // SS_res = 1, SS_tot = 5.
        assert!((r_squared(&[1.0, 2.0, 3.0, 5.0], &a).unwrap() - 0.8).abs() < 1e-12);
        assert!(r_squared(&[0.0, 0.0, 0.0, 10.0], &a).unwrap() < 0.0);
        assert_eq!(r_squared(&a, &[3.0; 4]), Err(Error::ZeroVariance));
    }

    #[test]
    fn csgi_cases() {
        assert_eq!(csgi(0.8, 0.8), 0.0);
        assert!((csgi(0.9, 0.3) - 1.0).abs() < 1e-12);
        assert_eq!(csgi(0.0, 0.0), 0.0);
        assert!((csgi(0.5, -0.2) - 2.0).abs() < 1e-12);
        assert_eq!(csgi(-0.3, -0.1), 0.0);
    }

    #[test]
    fn egci_cases() {
        assert_eq!(egci(0.2, 0.2).unwrap(), 0.0);
        assert_eq!(egci(0.0, 0.2).unwrap(), 1.0);
        assert!((egci(0.05, 0.2).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(egci(0.1, 0.0), Err(Error::ZeroVariance));
    }

    #[test]
    fn directionality_cases() {
        assert!((directionality(1.2, 0.2) - 1.0).abs() < 1e-12);
        assert_eq!(directionality(0.5, 0.5), 0.0);
        let chi = vec![
            vec![0.0, 0.9, 0.1],
            vec![0.3, 0.0, 0.5],
            vec![0.7, 0.2, 0.0],
        ];
        let m = DirectionalityMatrix::from_chi(vec!["a".into(), "b".into(), "c".into()], &chi).unwrap();
        let expected = [[0.0, 0.6, -0.6], [-0.6, 0.0, 0.3], [0.6, -0.3, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.values[i][j] - expected[i][j]).abs() < 1e-12);
                assert!((m.values[i][j] + m.values[j][i]).abs() < 1e-12);
            }
        }
    }

    fn wave(n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 * 0.37).sin() + 0.3 * (i as f64 * 1.9).cos()).collect()
    }

    #[test]
    fn rolling_perfect_vs_mean_predictor() {
        let actual = wave(500);
        let mut surr = vec![0.0; 500];
        for w in 0..5 {
            let m = mean(&actual[w * 100..(w + 1) * 100]);
            surr[w * 100..(w + 1) * 100].fill(m);
        }
        let tc = rolling_csgi(&actual, &surr, &actual, 100, 100, 50, 1).unwrap();
        assert_eq!(tc.len(), 5);
        for (c, s) in tc.chi.iter().zip(&tc.std) {
            assert!((c - 2.0).abs() < 1e-12);
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn rolling_identical_predictors_score_zero() {
        let actual = wave(300);
        let pred: Vec<f64> = actual.iter().map(|a| 0.8 * a + 0.05).collect();
        let tc = rolling_csgi(&pred, &pred, &actual, 50, 25, 20, 2).unwrap();
        assert!(tc.chi.iter().all(|&c| c == 0.0));
        assert!(tc.std.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn rolling_single_bootstrap_has_zero_std() {
        let actual = wave(200);
        let pred: Vec<f64> = actual.iter().map(|a| 0.5 * a).collect();
        let tc = rolling_csgi(&actual, &pred, &actual, 40, 40, 1, 3).unwrap();
        assert!(tc.std.iter().all(|&s| s == 0.0));
        assert!(tc.chi.iter().all(|&c| c > 0.0));
    }

    #[test]
    fn rolling_errors() {
        let a = wave(100);
        assert!(matches!(rolling_csgi(&a, &a, &a, 9, 1, 1, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(rolling_csgi(&a, &a, &a, 200, 1, 1, 0), Err(Error::TooShort(_))));
        assert!(matches!(rolling_csgi(&a[..50], &a, &a, 20, 1, 1, 0), Err(Error::Incompatible(_))));
        assert!(matches!(rolling_csgi(&a, &a, &a, 20, 1, 0, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn bootstrap_mean_converges() {
        let actual = wave(1000);
        let full: Vec<f64> = actual.iter().enumerate().map(|(i, a)| a + 0.3 * (i as f64 * 7.7).sin()).collect();
        let surr: Vec<f64> = actual.iter().enumerate().map(|(i, a)| 0.6 * a + 0.5 * (i as f64 * 3.1).cos()).collect();
        let n = 200;
        let a = rolling_csgi(&full, &surr, &actual, 1000, 1000, n, 5).unwrap();
        let b = rolling_csgi(&full, &surr, &actual, 1000, 1000, 2 * n, 6).unwrap();
        // Two independent Monte Carlo means: sd of the difference is
        // std·√(1/n + 1/2n); allow four of those.
        let bound = 4.0 * a.std[0] * (1.5 / n as f64).sqrt();
        assert!((a.chi[0] - b.chi[0]).abs() < bound, "{} vs {} (bound {bound})", a.chi[0], b.chi[0]);
    }

    #[test]
    fn timecourse_csv_round_trip() {
        let tc = CsgiTimecourse {
            window_starts: vec![0, 10],
            chi_xy: vec![0.1234567890123456, -1e-17],
            std_xy: vec![0.01, 0.0],
            chi_yx: vec![1.0 / 3.0, 2.0],
            std_yx: vec![f64::MIN_POSITIVE, 0.5],
            n_bootstrap: 7,
        };
        let mut buf = Vec::new();
        tc.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("window_start,chi_xy,std_xy,chi_yx,std_yx\n"));
        assert_eq!(CsgiTimecourse::read_csv(&buf[..], 7).unwrap(), tc);
    }

    proptest! {
        #[test]
        fn csgi_bounded_and_antisymmetric(a in -2.0f64..1.0, b in -2.0f64..1.0) {
            let c = csgi(a, b);
            prop_assert!((-2.0..=2.0).contains(&c));
            prop_assert!((c + csgi(b, a)).abs() < 1e-12);
        }

        #[test]
        fn disjoint_window_count(len in 10usize..2000, wl in 10usize..200) {
            prop_assume!(wl <= len);
            let a: Vec<f64> = (0..len).map(|i| (i as f64).sin()).collect();
            let tc = rolling_csgi(&a, &a, &a, wl, wl, 1, 0).unwrap();
            prop_assert_eq!(tc.len(), len / wl);
        }
    }
}
