//! Benchmark dynamical systems with known ground-truth coupling.
//!
//! Flows are integrated with classical fourth-order Runge-Kutta at a fixed
//! step; maps are iterated directly. Every generator is a pure function of
//! its parameters and seed. Escaped map orbits are retried from fresh
//! initial conditions drawn from the same seeded generator, so retries are
//! reproducible too.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::seeded_rng;
use crate::timeseries::TimeSeries;

/// Flows are declared diverged once any component exceeds this magnitude.
pub const FLOW_DIVERGENCE_BOUND: f64 = 1e12;
/// Maps are declared escaped once any component leaves `(-bound, bound)`.
pub const MAP_ESCAPE_BOUND: f64 = 10.0;
/// Fresh initial conditions tried before a map simulation gives up.
pub const MAX_RESAMPLES: usize = 20;

/// Piecewise-constant coupling strength over step indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSchedule {
    breakpoints: Vec<(usize, f64)>,
}

impl CouplingSchedule {
    pub fn new(breakpoints: Vec<(usize, f64)>) -> Result<Self> {
        match breakpoints.first() {
            Some(&(0, _)) => {}
            _ => {
                return Err(Error::InvalidParameter(
                    "coupling schedule must start at index 0".into(),
                ))
            }
        }
        if breakpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidParameter(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if let Some(&(i, v)) = breakpoints.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "coupling at breakpoint {i} must be finite and >= 0, got {v}"
            )));
        }
        Ok(Self { breakpoints })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![(0, value)])
    }

    /// Segments of `segment_len` steps alternating between `first` and
    /// `second`, covering `[0, total_len)`.
    pub fn alternating(segment_len: usize, first: f64, second: f64, total_len: usize) -> Result<Self> {
        if segment_len == 0 {
            return Err(Error::InvalidParameter("segment_len must be positive".into()));
        }
        let bps = (0..total_len.div_ceil(segment_len).max(1))
            .map(|k| (k * segment_len, if k % 2 == 0 { first } else { second }))
            .collect();
        Self::new(bps)
    }

    pub fn breakpoints(&self) -> &[(usize, f64)] {
        &self.breakpoints
    }

    /// Value of the last breakpoint starting at or before `t`.
    pub fn at(&self, t: usize) -> f64 {
        let idx = self.breakpoints.partition_point(|&(s, _)| s <= t);
        self.breakpoints[idx - 1].1
    }

    /// The same schedule re-indexed so that step `offset` becomes 0, e.g.
    /// to align a schedule over simulation steps with post-burn-in output.
    pub fn shifted(&self, offset: usize) -> Self {
        let mut bps = vec![(0, self.at(offset))];
        bps.extend(
            self.breakpoints
                .iter()
                .filter(|&&(s, _)| s > offset)
                .map(|&(s, v)| (s - offset, v)),
        );
        Self { breakpoints: bps }
    }

    /// `(start, end, value)` segments clipped to `[0, len)`.
    pub fn segments(&self, len: usize) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, &(s, v)) in self.breakpoints.iter().enumerate() {
            if s >= len {
                break;
            }
            let e = self.breakpoints.get(i + 1).map_or(len, |b| b.0.min(len));
            out.push((s, e, v));
        }
        out
    }
}

/// Output of a simulator run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub series: Vec<TimeSeries>,
    /// Named schedules over simulation steps (burn-in included).
    pub coupling_truth: Vec<(String, CouplingSchedule)>,
    pub burn_in: usize,
    pub seed: u64,
    /// Initial-condition redraws that were needed (maps only).
    pub resamples: usize,
}

impl SimOutput {
    pub fn get(&self, label: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|s| s.label() == label)
    }

    pub fn len(&self) -> usize {
        self.series.first().map_or(0, TimeSeries::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ground-truth schedule aligned with output indices.
    pub fn coupling_on_output(&self, name: &str) -> Option<CouplingSchedule> {
        self.coupling_truth
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.shifted(self.burn_in))
    }

    /// One column per component, a header of labels, no index column.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(self.series.iter().map(TimeSeries::label))?;
        for i in 0..self.len() {
            wtr.write_record(self.series.iter().map(|s| s.values()[i].to_string()))?;
        }
        wtr.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

fn build_output(
    columns: Vec<Vec<f64>>,
    labels: &[&str],
    dt: f64,
    coupling_truth: Vec<(String, CouplingSchedule)>,
    burn_in: usize,
    seed: u64,
    resamples: usize,
) -> Result<SimOutput> {
    let series = columns
        .into_iter()
        .zip(labels)
        .map(|(v, l)| TimeSeries::new(v, dt, *l))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimOutput {
        series,
        coupling_truth,
        burn_in,
        seed,
        resamples,
    })
}

// ---------------------------------------------------------------------------
// Runge-Kutta
// ---------------------------------------------------------------------------

/// Fixed-step classical RK4 with reusable stage buffers.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn step<F: Fn(&[f64], &mut [f64])>(&mut self, field: &F, state: &mut [f64], dt: f64) {
        let n = state.len();
        field(state, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = state[i] + 0.5 * dt * self.k1[i];
        }
        field(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = state[i] + 0.5 * dt * self.k2[i];
        }
        field(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = state[i] + dt * self.k3[i];
        }
        field(&self.tmp, &mut self.k4);
        for i in 0..n {
            state[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

fn flow_diverged(state: &[f64]) -> bool {
    state.iter().any(|v| !(v.abs() <= FLOW_DIVERGENCE_BOUND))
}

/// Integrate `n_steps` RK4 steps; the trajectory includes the initial state.
pub fn rk4_integrate<F: Fn(&[f64], &mut [f64])>(
    vector_field: F,
    initial_state: &[f64],
    dt: f64,
    n_steps: usize,
) -> Result<Vec<Vec<f64>>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if n_steps == 0 {
        return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
    }
    let mut rk = Rk4::new(initial_state.len());
    let mut state = initial_state.to_vec();
    let mut traj = Vec::with_capacity(n_steps + 1);
    traj.push(state.clone());
    for step in 1..=n_steps {
        rk.step(&vector_field, &mut state, dt);
        if flow_diverged(&state) {
            return Err(Error::Diverged { step });
        }
        traj.push(state.clone());
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// Rössler-driven Lorenz flow
// ---------------------------------------------------------------------------

/// Rössler oscillator (x1..x3) driving a Lorenz system (y1..y3) through
/// `C·x2²` in the y2 equation.
pub fn rossler_lorenz_field(c: f64) -> impl Fn(&[f64], &mut [f64]) {
    move |s: &[f64], d: &mut [f64]| {
        let (x1, x2, x3, y1, y2, y3) = (s[0], s[1], s[2], s[3], s[4], s[5]);
        d[0] = -6.0 * (x2 + x3);
        d[1] = 6.0 * (x1 + 0.2 * x2);
        d[2] = 6.0 * (0.2 + x3 * (x1 - 5.7));
        d[3] = 10.0 * (y2 - y1);
        d[4] = 28.0 * y1 - y2 - y1 * y3 + c * x2 * x2;
        d[5] = y1 * y2 - 8.0 / 3.0 * y3;
    }
}

/// Largest internal RK4 step. The time-scaled Rössler equations have a
/// contracting direction with rate ≈ 34, which RK4 cannot resolve at the
/// 0.1 sampling interval, so each sample is reached through substeps.
pub const RL_MAX_STEP: f64 = 0.01;

pub const ROSSLER_LORENZ_LABELS: [&str; 6] = ["x1", "x2", "x3", "y1", "y2", "y3"];

/// `dt` is the sampling interval of the returned series; integration uses
/// substeps of at most [`RL_MAX_STEP`].
pub fn simulate_rossler_lorenz(c: f64, n: usize, burn_in: usize, dt: f64, seed: u64) -> Result<SimOutput> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling must be >= 0, got {c}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let mut rng = seeded_rng(seed);
    let mut state: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let field = rossler_lorenz_field(c);
    let mut rk = Rk4::new(6);
    let substeps = (dt / RL_MAX_STEP).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;
    let mut advance = |state: &mut Vec<f64>| {
        for _ in 0..substeps {
            rk.step(&field, state, h);
        }
    };
    for step in 1..=burn_in {
        advance(&mut state);
        if flow_diverged(&state) {
            return Err(Error::Diverged { step });
        }
    }
    let mut cols: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(n)).collect();
    for i in 0..n {
        if i > 0 {
            advance(&mut state);
            if flow_diverged(&state) {
                return Err(Error::Diverged { step: burn_in + i });
            }
        }
        for (col, v) in cols.iter_mut().zip(&state) {
            col.push(*v);
        }
    }
    build_output(
        cols,
        &ROSSLER_LORENZ_LABELS,
        dt,
        vec![("C".into(), CouplingSchedule::constant(c)?)],
        burn_in,
        seed,
        0,
    )
}

// ---------------------------------------------------------------------------
// Maps
// ---------------------------------------------------------------------------

fn map_escaped(state: &[f64]) -> bool {
    state.iter().any(|v| !(v.abs() < MAP_ESCAPE_BOUND))
}

/// Iterate `step` for `burn_in + n` steps from initial conditions drawn by
/// `init`, redrawing on escape. Records states after burn-in, the first
/// record being the state reached after `burn_in` steps.
fn iterate_map<R, I, S>(
    rng: &mut R,
    dim: usize,
    n: usize,
    burn_in: usize,
    init: I,
    step: S,
) -> Result<(Vec<Vec<f64>>, usize)>
where
    R: Rng,
    I: Fn(&mut R) -> Vec<f64>,
    S: Fn(usize, &[f64], &mut [f64]),
{
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut last_escape = 0;
    for attempt in 0..=MAX_RESAMPLES {
        let mut state = init(rng);
        let mut next = vec![0.0; dim];
        let mut cols = vec![Vec::with_capacity(n); dim];
        let mut escaped = false;
        for t in 0..burn_in + n - 1 {
            if t >= burn_in {
                for (col, v) in cols.iter_mut().zip(&state) {
                    col.push(*v);
                }
            }
            step(t, &state, &mut next);
            std::mem::swap(&mut state, &mut next);
            if map_escaped(&state) {
                escaped = true;
                last_escape = t + 1;
                break;
            }
        }
        if !escaped {
            for (col, v) in cols.iter_mut().zip(&state) {
                col.push(*v);
            }
            return Ok((cols, attempt));
        }
    }
    Err(Error::Diverged { step: last_escape })
}

/// One step of the bidirectionally coupled two-species logistic maps.
pub fn two_species_step(c: f64, s: &[f64], out: &mut [f64]) {
    let (x, y) = (s[0], s[1]);
    out[0] = x * (3.8 - 3.8 * x - c * y);
    out[1] = y * (3.5 - 3.5 * y - 5.0 * c * x);
}

pub fn simulate_two_species(c: f64, n: usize, burn_in: usize, seed: u64) -> Result<SimOutput> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling must be >= 0, got {c}")));
    }
    let mut rng = seeded_rng(seed);
    let (cols, resamples) = iterate_map(
        &mut rng,
        2,
        n,
        burn_in,
        |r| vec![r.random_range(0.01..0.99), r.random_range(0.01..0.99)],
        |_, s, o| two_species_step(c, s, o),
    )?;
    build_output(
        cols,
        &["x", "y"],
        1.0,
        vec![("C".into(), CouplingSchedule::constant(c)?)],
        burn_in,
        seed,
        resamples,
    )
}

/// Coupled first-order autoregressive pair.
///
/// `noise_variance` is the variance of each Gaussian innovation (the
/// benchmark uses 0.1, i.e. a standard deviation of about 0.316).
pub fn simulate_coupled_ar(c: f64, n: usize, burn_in: usize, noise_variance: f64, seed: u64) -> Result<SimOutput> {
    if !c.is_finite() {
        return Err(Error::InvalidParameter(format!("coupling must be finite, got {c}")));
    }
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be positive, got {noise_variance}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let sd = noise_variance.sqrt();
    let mut rng = seeded_rng(seed);
    let mut x: f64 = rng.sample(StandardNormal);
    let mut y: f64 = rng.sample(StandardNormal);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for t in 0..burn_in + n {
        if t >= burn_in {
            xs.push(x);
            ys.push(y);
        }
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        let nx = 0.5 * x + 0.2 * y + sd * ex;
        let ny = c * x + 0.7 * y + sd * ey;
        if !(nx.abs() <= FLOW_DIVERGENCE_BOUND && ny.abs() <= FLOW_DIVERGENCE_BOUND) {
            return Err(Error::Diverged { step: t + 1 });
        }
        x = nx;
        y = ny;
    }
    build_output(
        vec![xs, ys],
        &["x", "y"],
        1.0,
        vec![("C".into(), CouplingSchedule::constant(c)?)],
        burn_in,
        seed,
        0,
    )
}

/// One step of two Hénon maps with couplings `cxy` (x drives y) and `cyx`
/// (y drives x). State layout is `[x1, x2, y1, y2]`.
pub fn henon_step(cxy: f64, cyx: f64, s: &[f64], out: &mut [f64]) {
    let (x1, x2, y1, y2) = (s[0], s[1], s[2], s[3]);
    out[0] = 1.4 - (cyx * x1 * y1 + (1.0 - cyx) * x1 * x1) + 0.3 * x2;
    out[1] = x1;
    out[2] = 1.4 - (cxy * x1 * y1 + (1.0 - cxy) * y1 * y1) + 0.3 * y2;
    out[3] = y1;
}

pub const HENON_LABELS: [&str; 4] = ["x1", "x2", "y1", "y2"];

fn check_unit_coupling(c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "Henon coupling must lie in [0, 1], got {c}"
        )));
    }
    Ok(())
}

/// Unidirectionally coupled Hénon maps (x drives y with strength `c`).
pub fn simulate_henon(c: f64, n: usize, burn_in: usize, seed: u64) -> Result<SimOutput> {
    check_unit_coupling(c)?;
    let mut out = simulate_henon_nonstationary(
        &CouplingSchedule::constant(c)?,
        &CouplingSchedule::constant(0.0)?,
        n,
        burn_in,
        seed,
    )?;
    out.coupling_truth = vec![("C".into(), CouplingSchedule::constant(c)?)];
    Ok(out)
}

/// Hénon maps with time-varying couplings evaluated per simulation step
/// (step 0 is the first burn-in step).
pub fn simulate_henon_nonstationary(
    cxy: &CouplingSchedule,
    cyx: &CouplingSchedule,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<SimOutput> {
    for s in [cxy, cyx] {
        for &(_, v) in s.breakpoints() {
            check_unit_coupling(v)?;
        }
    }
    let mut rng = seeded_rng(seed);
    let (cols, resamples) = iterate_map(
        &mut rng,
        4,
        n,
        burn_in,
        |r| (0..4).map(|_| r.random_range(-0.5..0.5)).collect(),
        |t, s, o| henon_step(cxy.at(t), cyx.at(t), s, o),
    )?;
    build_output(
        cols,
        &HENON_LABELS,
        1.0,
        vec![("Cxy".into(), cxy.clone()), ("Cyx".into(), cyx.clone())],
        burn_in,
        seed,
        resamples,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, pearson, sample_variance};

    #[test]
    fn rk4_linear_decay() {
        let traj = rk4_integrate(|s: &[f64], d: &mut [f64]| d[0] = -s[0], &[1.0], 0.1, 10).unwrap();
        assert_eq!(traj.len(), 11);
        assert!((traj[10][0] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn rk4_zero_field_is_constant() {
        let traj = rk4_integrate(|_: &[f64], d: &mut [f64]| d.fill(0.0), &[3.0, -2.0], 0.5, 20).unwrap();
        assert!(traj.iter().all(|s| s == &[3.0, -2.0]));
    }

    #[test]
    fn rk4_oscillator_energy_drift() {
        let traj = rk4_integrate(
            |s: &[f64], d: &mut [f64]| {
                d[0] = s[1];
                d[1] = -s[0];
            },
            &[1.0, 0.0],
            0.01,
            10_000,
        )
        .unwrap();
        let e = |s: &Vec<f64>| 0.5 * (s[0] * s[0] + s[1] * s[1]);
        let drift = (e(&traj[10_000]) - e(&traj[0])).abs() / e(&traj[0]);
        assert!(drift < 1e-4, "drift {drift}");
    }

    #[test]
    fn rk4_reports_divergence() {
        let r = rk4_integrate(|s: &[f64], d: &mut [f64]| d[0] = s[0] * s[0], &[1.0], 0.5, 100);
        assert!(matches!(r, Err(Error::Diverged { .. })));
    }

    #[test]
    fn uncoupled_rossler_lorenz_is_independent_and_bounded() {
        let out = simulate_rossler_lorenz(0.0, 100_000, 3_000, 0.1, 5).unwrap();
        let x2 = out.get("x2").unwrap().values();
        let y2 = out.get("y2").unwrap().values();
        assert!(pearson(x2, y2).unwrap().abs() < 0.1);
        assert!(out.get("y1").unwrap().values().iter().all(|v| v.abs() < 25.0));
        assert!(out.get("y3").unwrap().values().iter().all(|v| v.abs() < 60.0));
        assert_eq!(out.series.len(), 6);
        assert!(out.series.iter().all(|s| s.len() == 100_000 && s.dt() == 0.1));
    }

    #[test]
    fn rossler_lorenz_deterministic() {
        let a = simulate_rossler_lorenz(1.5, 2_000, 500, 0.1, 9).unwrap();
        let b = simulate_rossler_lorenz(1.5, 2_000, 500, 0.1, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_species_uncoupled_stays_in_unit_interval() {
        let out = simulate_two_species(0.0, 100_000, 1_000, 3).unwrap();
        for s in &out.series {
            assert!(s.values().iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn two_species_growth_rates_differ() {
        let mut a = [0.0; 2];
        two_species_step(0.0, &[0.4, 0.4], &mut a);
        assert_ne!(a[0], a[1]);
        assert_eq!(simulate_two_species(0.2, 500, 100, 4), simulate_two_species(0.2, 500, 100, 4));
    }

    #[test]
    fn coupled_ar_uncoupled_moments() {
        let out = simulate_coupled_ar(0.0, 300_000, 30_000, 0.1, 11).unwrap();
        let y = out.get("y").unwrap().values();
        let expected = 0.1 / (1.0 - 0.49);
        let v = sample_variance(y);
        assert!((v - expected).abs() / expected < 0.05, "var {v} vs {expected}");
        let m = mean(y);
        let lag1: f64 = y.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>()
            / y.iter().map(|a| (a - m) * (a - m)).sum::<f64>();
        assert!((lag1 - 0.7).abs() < 0.02, "lag-1 acf {lag1}");
    }

    #[test]
    fn coupled_ar_max_coupling_is_stationary() {
        // Eigenvalues of [[0.5, 0.2], [0.6, 0.7]] from the characteristic
        // polynomial l^2 - 1.2 l + (0.35 - 0.12).
        let (tr, det) = (1.2f64, 0.5 * 0.7 - 0.2 * 0.6);
        let rho = (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0;
        assert!((rho - 0.960_555_127_546_399).abs() < 1e-12);
        let out = simulate_coupled_ar(0.6, 200_000, 10_000, 0.1, 2).unwrap();
        let y = out.get("y").unwrap().values();
        let first = sample_variance(&y[..100_000]);
        let second = sample_variance(&y[100_000..]);
        assert!((first - second).abs() / first < 0.1);
    }

    #[test]
    fn henon_hand_iteration() {
        let mut s = [0.0, 0.0, 0.0, 0.0];
        let mut next = [0.0; 4];
        let expected = [1.4, -0.56, 1.5064];
        for e in expected {
            henon_step(0.3, 0.0, &s, &mut next);
            s = next;
            assert!((s[0] - e).abs() < 1e-12, "{} vs {e}", s[0]);
        }
    }

    #[test]
    fn henon_full_coupling_reduces_to_driving_term() {
        let s = [0.7, -0.2, 0.4, 0.1];
        let mut o = [0.0; 4];
        henon_step(1.0, 0.0, &s, &mut o);
        assert!((o[2] - (1.4 - 0.7 * 0.4 + 0.3 * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn henon_driver_independent_of_coupling() {
        let a = simulate_henon(0.0, 5_000, 1_000, 21).unwrap();
        let b = simulate_henon(0.6, 5_000, 1_000, 21).unwrap();
        assert_eq!(a.resamples, b.resamples);
        assert_eq!(a.get("x1"), b.get("x1"));
        assert_eq!(a.get("x2"), b.get("x2"));
        assert_ne!(a.get("y1"), b.get("y1"));
    }

    #[test]
    fn nonstationary_reduces_to_stationary() {
        let zero = CouplingSchedule::constant(0.0).unwrap();
        let six = CouplingSchedule::constant(0.6).unwrap();
        let ns = simulate_henon_nonstationary(&zero, &zero, 3_000, 500, 8).unwrap();
        let st = simulate_henon(0.0, 3_000, 500, 8).unwrap();
        assert_eq!(ns.series, st.series);
        let ns = simulate_henon_nonstationary(&six, &zero, 3_000, 500, 8).unwrap();
        let st = simulate_henon(0.6, 3_000, 500, 8).unwrap();
        for (a, b) in ns.series.iter().zip(&st.series) {
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn toggled_schedule_bookkeeping() {
        let burn = 1_000;
        let n = 10_000;
        let cxy = CouplingSchedule::alternating(2_000, 0.0, 0.6, burn + n).unwrap();
        let out = simulate_henon_nonstationary(&cxy, &CouplingSchedule::constant(0.0).unwrap(), n, burn, 1)
            .unwrap();
        assert_eq!(out.len(), n);
        let aligned = out.coupling_on_output("Cxy").unwrap();
        let segs = aligned.segments(n);
        assert_eq!(segs.first().unwrap(), &(0, 1_000, 0.0));
        assert_eq!(segs[1], (1_000, 3_000, 0.6));
        assert_eq!(segs.last().unwrap().1, n);
        for (s, e, v) in segs {
            assert_eq!(cxy.at(s + burn), v);
            assert_eq!(cxy.at(e - 1 + burn), v);
        }
    }

    #[test]
    fn schedule_validation_and_lookup() {
        assert!(CouplingSchedule::new(vec![]).is_err());
        assert!(CouplingSchedule::new(vec![(1, 0.0)]).is_err());
        assert!(CouplingSchedule::new(vec![(0, 0.0), (5, 0.1), (5, 0.2)]).is_err());
        assert!(CouplingSchedule::new(vec![(0, -0.1)]).is_err());
        let s = CouplingSchedule::new(vec![(0, 0.0), (10, 0.4), (20, 0.1)]).unwrap();
        assert_eq!(s.at(0), 0.0);
        assert_eq!(s.at(9), 0.0);
        assert_eq!(s.at(10), 0.4);
        assert_eq!(s.at(1_000), 0.1);
        let sh = s.shifted(15);
        assert_eq!(sh.breakpoints(), &[(0, 0.4), (5, 0.1)]);
    }

    #[test]
    fn burn_in_shift_invariance() {
        let (n, k, b) = (2_000, 300, 500);
        let long = simulate_henon(0.4, n + k, b, 13).unwrap();
        let short = simulate_henon(0.4, n, b + k, 13).unwrap();
        assert_eq!(long.resamples, 0);
        for (l, s) in long.series.iter().zip(&short.series) {
            assert_eq!(&l.values()[k..], s.values());
        }
        let long = simulate_two_species(0.1, n + k, b, 13).unwrap();
        let short = simulate_two_species(0.1, n, b + k, 13).unwrap();
        for (l, s) in long.series.iter().zip(&short.series) {
            assert_eq!(&l.values()[k..], s.values());
        }
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let out = simulate_two_species(0.1, 5, 10, 1).unwrap();
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y");
        assert_eq!(lines.len(), 6);
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[0], out.series[0].values()[0]);
    }
}
