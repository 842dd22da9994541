//! Convergent cross mapping.
//!
//! If `x` drives `y`, the delay embedding of `y` (its shadow manifold)
//! carries enough information to reconstruct `x`. Skill is the Pearson
//! correlation between reconstructed and actual values, and for a real
//! causal link it grows with the library size.

use std::io::Write;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{derive_seed, mean, pearson, sample_std, seeded_rng};
use crate::timeseries::TimeSeries;

/// Upper bound on prediction points per cross-map evaluation when the
/// library does not span the whole manifold.
pub const DEFAULT_MAX_PREDICTIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct DelayEmbedding {
    pub e: usize,
    pub tau: usize,
    /// Row-major `point_count × e` coordinates.
    coords: Vec<f64>,
    /// Time index each point is aligned with: that of its newest
    /// coordinate, `i + (e − 1)·tau`.
    pub source_indices: Vec<usize>,
}

impl DelayEmbedding {
    pub fn len(&self) -> usize {
        self.source_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_indices.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.e..(i + 1) * self.e]
    }

    /// Points closer in time than this are not used as neighbours.
    pub fn theiler_window(&self) -> usize {
        (self.e - 1) * self.tau
    }
}

/// Point `i` is `(x(i), x(i+tau), …, x(i+(e−1)tau))`.
pub fn delay_embed(ts: &TimeSeries, e: usize, tau: usize) -> Result<DelayEmbedding> {
    if e == 0 || tau == 0 {
        return Err(Error::InvalidParameter("embedding dimension and delay must be >= 1".into()));
    }
    let span = (e - 1) * tau;
    if ts.len() <= span {
        return Err(Error::TooShort(format!(
            "length {} too short for E={e}, tau={tau}",
            ts.len()
        )));
    }
    let count = ts.len() - span;
    let v = ts.values();
    let mut coords = Vec::with_capacity(count * e);
    for i in 0..count {
        for j in 0..e {
            coords.push(v[i + j * tau]);
        }
    }
    Ok(DelayEmbedding {
        e,
        tau,
        coords,
        source_indices: (0..count).map(|i| i + span).collect(),
    })
}

/// Simplex weights from sorted neighbour distances: `exp(−d_i / d_1)`,
/// normalized. When the nearest distance is zero all weight goes to the
/// exact matches.
pub fn simplex_weights(dists: &[f64]) -> Vec<f64> {
    let d1 = dists[0];
    let raw: Vec<f64> = if d1 > 0.0 {
        dists.iter().map(|d| (-d / d1).exp()).collect()
    } else {
        dists.iter().map(|&d| if d == 0.0 { 1.0 } else { 0.0 }).collect()
    };
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Estimate `target` at each prediction point from its `e + 1` nearest
/// library neighbours on the source manifold.
fn simplex_estimates(
    emb: &DelayEmbedding,
    target: &[f64],
    library: &[usize],
    predict_at: &[usize],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = emb.e + 1;
    let theiler = emb.theiler_window();
    let mut estimates = Vec::with_capacity(predict_at.len());
    let mut actuals = Vec::with_capacity(predict_at.len());
    // (squared distance, library point) kept sorted ascending.
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for &p in predict_at {
        best.clear();
        let q = emb.point(p);
        for &l in library {
            if l.abs_diff(p) <= theiler {
                continue;
            }
            let d = sq_dist(q, emb.point(l));
            if best.len() == k && d >= best[k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(bd, _)| bd <= d);
            best.insert(pos, (d, l));
            best.truncate(k);
        }
        if best.len() < k {
            return Err(Error::TooShort(format!(
                "library has fewer than {k} usable neighbours"
            )));
        }
        let dists: Vec<f64> = best.iter().map(|(d, _)| d.sqrt()).collect();
        let w = simplex_weights(&dists);
        let est: f64 = best
            .iter()
            .zip(&w)
            .map(|(&(_, l), wi)| wi * target[emb.source_indices[l]])
            .sum();
        estimates.push(est);
        actuals.push(target[emb.source_indices[p]]);
    }
    Ok((estimates, actuals))
}

/// Cross-map skill of reconstructing `target` from `source_emb` using a
/// random library of `lib_size` points.
///
/// When `lib_size` covers the whole manifold every point is predicted
/// (leave-out by the Theiler window); otherwise a random subset of at most
/// `max_predictions` points is predicted.
pub fn cross_map_with(
    source_emb: &DelayEmbedding,
    target: &TimeSeries,
    lib_size: usize,
    max_predictions: usize,
    seed: u64,
) -> Result<f64> {
    let n = source_emb.len();
    if target.len() < source_emb.source_indices.last().map_or(0, |&i| i + 1) {
        return Err(Error::Incompatible("target shorter than the embedded source".into()));
    }
    if lib_size < source_emb.e + 2 {
        return Err(Error::TooShort(format!(
            "library size {lib_size} below E + 2 = {}",
            source_emb.e + 2
        )));
    }
    if lib_size > n {
        return Err(Error::TooShort(format!(
            "library size {lib_size} exceeds {n} embedded points"
        )));
    }
    let mut rng = seeded_rng(seed);
    let (library, predict_at): (Vec<usize>, Vec<usize>) = if lib_size == n {
        let all: Vec<usize> = (0..n).collect();
        let pred = if n > max_predictions {
            let mut p = sample(&mut rng, n, max_predictions).into_vec();
            p.sort_unstable();
            p
        } else {
            all.clone()
        };
        (all, pred)
    } else {
        let lib = sample(&mut rng, n, lib_size).into_vec();
        let mut pred = sample(&mut rng, n, max_predictions.min(n)).into_vec();
        pred.sort_unstable();
        (lib, pred)
    };
    let (est, act) = simplex_estimates(source_emb, target.values(), &library, &predict_at)?;
    pearson(&est, &act).ok_or(Error::ZeroVariance)
}

pub fn cross_map(source_emb: &DelayEmbedding, target: &TimeSeries, lib_size: usize, seed: u64) -> Result<f64> {
    cross_map_with(source_emb, target, lib_size, DEFAULT_MAX_PREDICTIONS, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcmResult {
    pub lib_sizes: Vec<usize>,
    /// Skill reconstructing x from y's manifold (evidence for x → y).
    pub skill_xy: Vec<f64>,
    /// Skill reconstructing y from x's manifold (evidence for y → x).
    pub skill_yx: Vec<f64>,
    /// Sample std of the skill across replicate libraries (0 for one replicate).
    pub std_xy: Vec<f64>,
    pub std_yx: Vec<f64>,
}

impl CcmResult {
    /// CSV with columns `lib_size, skill_xy, std_xy, skill_yx, std_yx`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["lib_size", "skill_xy", "std_xy", "skill_yx", "std_yx"])?;
        for i in 0..self.lib_sizes.len() {
            wtr.write_record([
                self.lib_sizes[i].to_string(),
                self.skill_xy[i].to_string(),
                self.std_xy[i].to_string(),
                self.skill_yx[i].to_string(),
                self.std_yx[i].to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

/// Cross-map skill in both directions for each library size, averaged over
/// `n_replicates` random libraries.
pub fn ccm_pair(
    x: &TimeSeries,
    y: &TimeSeries,
    e: usize,
    tau: usize,
    lib_sizes: &[usize],
    n_replicates: usize,
    seed: u64,
) -> Result<CcmResult> {
    if x.len() != y.len() {
        return Err(Error::Incompatible(format!(
            "x length {} != y length {}",
            x.len(),
            y.len()
        )));
    }
    if n_replicates == 0 {
        return Err(Error::InvalidParameter("n_replicates must be >= 1".into()));
    }
    if lib_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("library sizes must be increasing".into()));
    }
    let mx = delay_embed(x, e, tau)?;
    let my = delay_embed(y, e, tau)?;
    let mut res = CcmResult {
        lib_sizes: lib_sizes.to_vec(),
        skill_xy: Vec::with_capacity(lib_sizes.len()),
        skill_yx: Vec::with_capacity(lib_sizes.len()),
        std_xy: Vec::with_capacity(lib_sizes.len()),
        std_yx: Vec::with_capacity(lib_sizes.len()),
    };
    for (li, &l) in lib_sizes.iter().enumerate() {
        let mut xy = Vec::with_capacity(n_replicates);
        let mut yx = Vec::with_capacity(n_replicates);
        for r in 0..n_replicates {
            let s = derive_seed(seed, (li * n_replicates + r) as u64);
            xy.push(cross_map(&my, x, l, s)?);
            yx.push(cross_map(&mx, y, l, s)?);
        }
        res.skill_xy.push(mean(&xy));
        res.skill_yx.push(mean(&yx));
        res.std_xy.push(if n_replicates > 1 { sample_std(&xy) } else { 0.0 });
        res.std_yx.push(if n_replicates > 1 { sample_std(&yx) } else { 0.0 });
    }
    Ok(res)
}
