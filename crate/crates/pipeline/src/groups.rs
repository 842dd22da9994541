//! Averaging pairwise channel results into region-level matrices.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use csgi_core::metrics::DirectionalityMatrix;
use csgi_core::CsgiTimecourse;

use crate::error::{PipelineError, Result};

/// Named groups of channels, in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, Vec<String>>", into = "BTreeMap<String, Vec<String>>")]
pub struct ChannelGroups {
    groups: Vec<(String, Vec<String>)>,
}

impl ChannelGroups {
    pub fn new(groups: Vec<(String, Vec<String>)>) -> Result<Self> {
        let mut labels = BTreeSet::new();
        for (label, chans) in &groups {
            if !labels.insert(label.as_str()) {
                return Err(PipelineError::config("groups", format!("duplicate group {label:?}")));
            }
            if chans.is_empty() {
                return Err(PipelineError::config(format!("groups.{label}"), "group is empty"));
            }
            let mut seen = BTreeSet::new();
            for c in chans {
                if !seen.insert(c) {
                    return Err(PipelineError::config(format!("groups.{label}"), format!("channel {c:?} listed twice")));
                }
            }
        }
        Ok(Self { groups })
    }

    pub fn labels(&self) -> Vec<String> {
        self.groups.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn channels(&self, group: usize) -> &[String] {
        &self.groups[group].1
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

impl TryFrom<BTreeMap<String, Vec<String>>> for ChannelGroups {
    type Error = PipelineError;

    fn try_from(m: BTreeMap<String, Vec<String>>) -> Result<Self> {
        Self::new(m.into_iter().collect())
    }
}

impl From<ChannelGroups> for BTreeMap<String, Vec<String>> {
    fn from(g: ChannelGroups) -> Self {
        g.groups.into_iter().collect()
    }
}

/// Per-pair timecourses keyed by `(x, y)` channel names. A result for
/// `(a, b)` also supplies `b → a` through its `yx` direction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairwiseResults {
    pairs: BTreeMap<(String, String), CsgiTimecourse>,
}

impl PairwiseResults {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, x: impl Into<String>, y: impl Into<String>, tc: CsgiTimecourse) {
        self.pairs.insert((x.into(), y.into()), tc);
    }

    /// χ timecourse of `from → to`.
    pub fn chi(&self, from: &str, to: &str) -> Option<&[f64]> {
        if let Some(tc) = self.pairs.get(&(from.to_string(), to.to_string())) {
            return Some(&tc.chi_xy);
        }
        self.pairs.get(&(to.to_string(), from.to_string())).map(|tc| tc.chi_yx.as_slice())
    }

    fn has_channel(&self, c: &str) -> bool {
        self.pairs.keys().any(|(a, b)| a == c || b == c)
    }

    fn n_windows(&self) -> Option<usize> {
        self.pairs.values().next().map(CsgiTimecourse::len)
    }
}

/// Region-level mean χ for each epoch; `values[e][a][b]` scores group a → group b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMatrices {
    pub groups: Vec<String>,
    /// Half-open window-index ranges.
    pub epochs: Vec<(usize, usize)>,
    pub values: Vec<Vec<Vec<f64>>>,
}

impl GroupMatrices {
    /// Antisymmetric directionality for epoch `e`.
    pub fn directionality(&self, e: usize) -> Result<DirectionalityMatrix> {
        Ok(DirectionalityMatrix::from_chi(self.groups.clone(), &self.values[e])?)
    }
}

/// Mean χ over all channel pairs `(i ∈ A, j ∈ B)` and all windows of each
/// epoch. Diagonal cells average within-group pairs, excluding self-pairs;
/// they are NaN for single-channel groups. `epochs` are window-index
/// ranges; `None` makes every window its own epoch.
pub fn group_average(
    pairwise: &PairwiseResults,
    groups: &ChannelGroups,
    epochs: Option<&[(usize, usize)]>,
) -> Result<GroupMatrices> {
    for g in 0..groups.len() {
        for c in groups.channels(g) {
            if !pairwise.has_channel(c) {
                return Err(PipelineError::MissingChannel(c.clone()));
            }
        }
    }
    let n_windows = pairwise.n_windows().unwrap_or(0);
    let epochs: Vec<(usize, usize)> = match epochs {
        Some(e) => e.to_vec(),
        None => (0..n_windows).map(|w| (w, w + 1)).collect(),
    };
    for &(s, e) in &epochs {
        if s >= e || e > n_windows {
            return Err(PipelineError::Data(format!("epoch {s}..{e} outside 0..{n_windows} windows")));
        }
    }
    let k = groups.len();
    let mut values = vec![vec![vec![f64::NAN; k]; k]; epochs.len()];
    for a in 0..k {
        for b in 0..k {
            let mut series: Vec<&[f64]> = Vec::new();
            for i in groups.channels(a) {
                for j in groups.channels(b) {
                    if i == j {
                        continue;
                    }
                    let chi = pairwise
                        .chi(i, j)
                        .ok_or_else(|| PipelineError::MissingChannel(format!("pair {i} -> {j}")))?;
                    if chi.len() != n_windows {
                        return Err(PipelineError::Data(format!("pair {i} -> {j} has a different window count")));
                    }
                    series.push(chi);
                }
            }
            if series.is_empty() {
                continue;
            }
            for (ei, &(s, e)) in epochs.iter().enumerate() {
                let sum: f64 = series.iter().map(|c| c[s..e].iter().sum::<f64>()).sum();
                values[ei][a][b] = sum / (series.len() * (e - s)) as f64;
            }
        }
    }
    Ok(GroupMatrices { groups: groups.labels(), epochs, values })
}
