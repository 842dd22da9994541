//! Surrogate linear Granger causality: lagged least-squares predictors
//! scored with the CSGI against a surrogate-driver refit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{rolling_csgi, CsgiTimecourse, WindowScores};
use crate::surrogate::{make_surrogate, SurrogateKind};
use crate::timeseries::{autocorrelation_time, TimeSeries};

/// Singular values below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-12;
/// Upper bound on the automatically chosen model order.
pub const MAX_DEFAULT_ORDER: usize = 20;

/// `target(t) = intercept + Σ a_i target(t−i) + Σ b_i driver(t−i) + ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    pub order: usize,
    pub coeffs_self: Vec<f64>,
    pub coeffs_cross: Vec<f64>,
    pub intercept: f64,
    /// The normal equations were rank-deficient and the minimum-norm
    /// pseudoinverse solution was used.
    pub singular: bool,
    /// In-sample residual variance (mean squared residual).
    pub residual_variance: f64,
}

impl VarModel {
    /// One-step predictions for `t = order..n`.
    pub fn predict(&self, driver: &[f64], target: &[f64]) -> Vec<f64> {
        let k = self.order;
        (k..target.len())
            .map(|t| {
                let mut p = self.intercept;
                for i in 1..=k {
                    p += self.coeffs_self[i - 1] * target[t - i];
                    p += self.coeffs_cross[i - 1] * driver[t - i];
                }
                p
            })
            .collect()
    }
}

/// Least-squares fit of `target(t)` on an intercept plus lags `1..=order`
/// of each regressor series. Returns coefficients (intercept first, then
/// each regressor's lags in order), the singular flag and residuals.
fn lagged_ols(target: &[f64], regressors: &[&[f64]], order: usize) -> (Vec<f64>, bool, Vec<f64>) {
    let n = target.len();
    let p = 1 + regressors.len() * order;
    let row = |t: usize, buf: &mut [f64]| {
        buf[0] = 1.0;
        for (r, series) in regressors.iter().enumerate() {
            for i in 1..=order {
                buf[1 + r * order + i - 1] = series[t - i];
            }
        }
    };
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    let mut buf = vec![0.0; p];
    for t in order..n {
        row(t, &mut buf);
        for a in 0..p {
            xty[a] += buf[a] * target[t];
            for b in a..p {
                xtx[(a, b)] += buf[a] * buf[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[(a, b)] = xtx[(b, a)];
        }
    }
    let svd = xtx.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let singular = !(smin > RANK_TOL * smax);
    let tol = RANK_TOL * smax;
    let solve = |rhs: &DVector<f64>| -> DVector<f64> {
        svd.solve(rhs, tol).expect("svd computed with both factors")
    };
    let residuals = |beta: &DVector<f64>, buf: &mut [f64]| -> Vec<f64> {
        (order..n)
            .map(|t| {
                row(t, buf);
                target[t] - buf.iter().zip(beta.iter()).map(|(x, b)| x * b).sum::<f64>()
            })
            .collect()
    };
    let mut beta = solve(&xty);
    // One round of iterative refinement on the normal equations.
    let r = residuals(&beta, &mut buf);
    let mut xtr = DVector::<f64>::zeros(p);
    for (t, e) in (order..n).zip(&r) {
        row(t, &mut buf);
        for a in 0..p {
            xtr[a] += buf[a] * e;
        }
    }
    beta += solve(&xtr);
    let r = residuals(&beta, &mut buf);
    (beta.iter().copied().collect(), singular, r)
}

fn check_fit_inputs(n: usize, order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::InvalidParameter("model order must be >= 1".into()));
    }
    if n <= 10 * order {
        return Err(Error::TooShort(format!(
            "series of length {n} too short for order {order} (need > {})",
            10 * order
        )));
    }
    Ok(())
}

/// Fit a bivariate lagged linear model predicting `target` from the pasts
/// of `target` and `driver`.
pub fn fit_var(driver: &TimeSeries, target: &TimeSeries, order: usize) -> Result<VarModel> {
    if driver.len() != target.len() {
        return Err(Error::Incompatible(format!(
            "driver length {} != target length {}",
            driver.len(),
            target.len()
        )));
    }
    check_fit_inputs(target.len(), order)?;
    let (beta, singular, resid) = lagged_ols(target.values(), &[target.values(), driver.values()], order);
    Ok(VarModel {
        order,
        intercept: beta[0],
        coeffs_self: beta[1..1 + order].to_vec(),
        coeffs_cross: beta[1 + order..].to_vec(),
        singular,
        residual_variance: resid.iter().map(|e| e * e).sum::<f64>() / resid.len() as f64,
    })
}

/// Self-only autoregressive fit; returns the coefficients (intercept first)
/// and the in-sample residual variance.
pub fn fit_ar(target: &TimeSeries, order: usize) -> Result<(Vec<f64>, f64)> {
    check_fit_inputs(target.len(), order)?;
    let (beta, _, resid) = lagged_ols(target.values(), &[target.values()], order);
    let var = resid.iter().map(|e| e * e).sum::<f64>() / resid.len() as f64;
    Ok((beta, var))
}

/// Residuals of [`fit_var`]'s model, aligned with `t = order..n`.
pub fn var_residuals(model: &VarModel, driver: &TimeSeries, target: &TimeSeries) -> Vec<f64> {
    model
        .predict(driver.values(), target.values())
        .iter()
        .zip(&target.values()[model.order..])
        .map(|(p, a)| a - p)
        .collect()
}

/// Autocorrelation time of the target clamped to `[1, 20]`; 1 for series
/// too short to estimate it.
pub fn default_order(target: &TimeSeries) -> usize {
    autocorrelation_time(target)
        .unwrap_or(1)
        .clamp(1, MAX_DEFAULT_ORDER)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlgcConfig {
    /// `None` selects [`default_order`] per direction.
    pub order: Option<usize>,
    pub surrogate: SurrogateKind,
    pub window_len: usize,
    pub stride: usize,
    pub n_bootstrap: usize,
    pub seed: u64,
}

impl Default for SlgcConfig {
    fn default() -> Self {
        Self {
            order: None,
            surrogate: SurrogateKind::UniformRandom,
            window_len: 1000,
            stride: 1000,
            n_bootstrap: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlgcResult {
    pub timecourse: CsgiTimecourse,
    pub order_xy: usize,
    pub order_yx: usize,
    /// Any of the four fits hit the rank-deficient path.
    pub singular: bool,
}

/// CSGI timecourse for `driver → target`, with predictions starting at
/// `offset` (>= the model order) so that both directions share windows.
fn direction(
    driver: &TimeSeries,
    target: &TimeSeries,
    order: usize,
    offset: usize,
    cfg: &SlgcConfig,
) -> Result<(WindowScores, bool)> {
    let surrogate = make_surrogate(driver, cfg.surrogate, crate::stats::derive_seed(cfg.seed, 1))?;
    let full = fit_var(driver, target, order)?;
    let surr = fit_var(&surrogate, target, order)?;
    let skip = offset - order;
    let pf = full.predict(driver.values(), target.values());
    let ps = surr.predict(surrogate.values(), target.values());
    let scores = rolling_csgi(
        &pf[skip..],
        &ps[skip..],
        &target.values()[offset..],
        cfg.window_len,
        cfg.stride,
        cfg.n_bootstrap,
        crate::stats::derive_seed(cfg.seed, 2),
    )?;
    Ok((scores.offset(offset), full.singular || surr.singular))
}

/// Both directions of surrogate linear Granger causality for a pair.
///
/// Each direction fits one full model on the real driver and one on a
/// surrogate driver, both over the whole series, then scores one-step
/// predictions over rolling windows. Both directions use the same
/// surrogate and bootstrap seeds, so swapping the arguments swaps the
/// returned directions exactly.
pub fn slgc_pair(x: &TimeSeries, y: &TimeSeries, cfg: &SlgcConfig) -> Result<SlgcResult> {
    if x.len() != y.len() {
        return Err(Error::Incompatible(format!(
            "x length {} != y length {}",
            x.len(),
            y.len()
        )));
    }
    let order_xy = cfg.order.unwrap_or_else(|| default_order(y));
    let order_yx = cfg.order.unwrap_or_else(|| default_order(x));
    let offset = order_xy.max(order_yx);
    let (xy, s1) = direction(x, y, order_xy, offset, cfg)?;
    let (yx, s2) = direction(y, x, order_yx, offset, cfg)?;
    Ok(SlgcResult {
        timecourse: CsgiTimecourse::from_directions(xy, yx)?,
        order_xy,
        order_yx,
        singular: s1 || s2,
    })
}
