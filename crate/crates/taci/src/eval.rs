use rayon::prelude::*;

use csgi_core::metrics::{rolling_csgi, r_squared, CsgiTimecourse, WindowScores};
use csgi_core::stats::derive_seed;
use csgi_core::TimeSeries;

use crate::error::Result;
use crate::model::TaciNet;
use crate::train::{gather_windows, NetworkRole, PairInputs, TaciModelSet};

const EVAL_BATCH: usize = 1024;

/// One-step-per-index predictions of `target`: element `i` is the last
/// output of the window starting at `i`, i.e. the prediction of
/// `target[i + seq_length − 1 + lag]`.
pub fn predict_series(net: &TaciNet, driver: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    let cfg = net.config();
    let (l, lag) = (cfg.seq_length, cfg.lag);
    if target.len() < l + lag {
        return Err(csgi_core::Error::TooShort(format!("series shorter than one window ({})", l + lag)).into());
    }
    let starts: Vec<usize> = (0..=target.len() - l - lag).collect();
    let mut out = Vec::with_capacity(starts.len());
    for chunk in starts.chunks(EVAL_BATCH) {
        let (d, t, _) = gather_windows(driver, target, chunk, l, lag);
        let pred = net.predict(d, t)?;
        out.extend(pred.data().chunks(l).map(|w| w[l - 1]));
    }
    Ok(out)
}

/// Aligned predictions of one causal direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionPredictions {
    /// Index in the original series of `actual[0]`.
    pub first_index: usize,
    pub actual: Vec<f64>,
    pub full: Vec<f64>,
    pub surrogate: Vec<f64>,
}

impl DirectionPredictions {
    /// R² of the full and surrogate networks over the whole series.
    pub fn r_squared(&self) -> Result<(f64, f64)> {
        Ok((r_squared(&self.full, &self.actual)?, r_squared(&self.surrogate, &self.actual)?))
    }
}

/// Predictions of all four networks on `(x, y)` in evaluation mode.
/// Returns `(x→y, y→x)`; the first predicts y, the second x.
pub fn predict_pair(models: &TaciModelSet, x: &TimeSeries, y: &TimeSeries) -> Result<(DirectionPredictions, DirectionPredictions)> {
    let inputs = PairInputs::new(x, y, &models.config, &models.seeds)?;
    let preds: Vec<Vec<f64>> = NetworkRole::ALL
        .par_iter()
        .map(|&role| {
            let (driver, target) = inputs.for_role(role);
            predict_series(models.network(role), driver, target)
        })
        .collect::<Result<_>>()?;
    let first = models.config.seq_length - 1 + models.config.lag;
    let n = preds[0].len();
    let mut it = preds.into_iter();
    let (xy_full, xy_surr, yx_full, yx_surr) = (
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
    );
    Ok((
        DirectionPredictions {
            first_index: first,
            actual: inputs.y[first..first + n].to_vec(),
            full: xy_full,
            surrogate: xy_surr,
        },
        DirectionPredictions {
            first_index: first,
            actual: inputs.x[first..first + n].to_vec(),
            full: yx_full,
            surrogate: yx_surr,
        },
    ))
}

/// Score a prediction pair with bootstrapped rolling-window CSGI. Window
/// starts refer to indices of the original series.
pub fn score_predictions(
    p: &DirectionPredictions,
    window_len: usize,
    stride: usize,
    n_bootstrap: usize,
    seed: u64,
) -> Result<WindowScores> {
    Ok(rolling_csgi(&p.full, &p.surrogate, &p.actual, window_len, stride, n_bootstrap, seed)?.offset(p.first_index))
}

/// CSGI timecourses of both directions from one trained model set. Both
/// directions use the same windows and the same bootstrap resamples.
pub fn evaluate_pair(
    models: &TaciModelSet,
    x: &TimeSeries,
    y: &TimeSeries,
    window_len: usize,
    stride: usize,
    n_bootstrap: usize,
    seed: u64,
) -> Result<CsgiTimecourse> {
    let (xy, yx) = predict_pair(models, x, y)?;
    let boot = derive_seed(seed, 2);
    let sxy = score_predictions(&xy, window_len, stride, n_bootstrap, boot)?;
    let syx = score_predictions(&yx, window_len, stride, n_bootstrap, boot)?;
    Ok(CsgiTimecourse::from_directions(sxy, syx)?)
}
