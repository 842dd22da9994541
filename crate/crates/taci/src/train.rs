use log::{debug, info, warn};
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use csgi_core::stats::derive_seed;
use csgi_core::surrogate::make_surrogate;
use csgi_core::timeseries::{autocorrelation_time, zscore};
use csgi_core::TimeSeries;
use csgi_nn::{adam_step, AdamState, Graph, Tensor};

use crate::config::TaciConfig;
use crate::error::{Result, TaciError};
use crate::model::TaciNet;

/// Per-epoch record of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub learning_rate: Vec<f64>,
    /// Epoch (0-based) whose weights were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

/// Stack the windows starting at `starts` into `(driver, target history,
/// target future)` batches of shape `(batch, seq_length, 1)`.
pub fn gather_windows(
    driver: &[f64],
    target: &[f64],
    starts: &[usize],
    seq_length: usize,
    lag: usize,
) -> (Tensor, Tensor, Tensor) {
    let b = starts.len();
    let mut d = Vec::with_capacity(b * seq_length);
    let mut t = Vec::with_capacity(b * seq_length);
    let mut f = Vec::with_capacity(b * seq_length);
    for &s in starts {
        d.extend_from_slice(&driver[s..s + seq_length]);
        t.extend_from_slice(&target[s..s + seq_length]);
        f.extend_from_slice(&target[s + lag..s + lag + seq_length]);
    }
    let shape = vec![b, seq_length, 1];
    (
        Tensor::new(shape.clone(), d).expect("shape"),
        Tensor::new(shape.clone(), t).expect("shape"),
        Tensor::new(shape, f).expect("shape"),
    )
}

/// Chronological split of window starts; training windows end before the
/// first validation window begins.
fn split_starts(n: usize, cfg: &TaciConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let span = cfg.seq_length + cfg.lag;
    if n < span + 1 {
        return Err(TaciError::Data(csgi_core::Error::TooShort(format!(
            "series of length {n} shorter than one window ({span})"
        ))));
    }
    let last = n - span;
    let all: Vec<usize> = (0..=last).step_by(cfg.train_stride).collect();
    let n_val = ((all.len() as f64 * cfg.validation_fraction).ceil() as usize).max(1);
    let val = all[all.len() - n_val..].to_vec();
    let train: Vec<usize> = all[..all.len() - n_val]
        .iter()
        .copied()
        .filter(|&s| s + span <= val[0])
        .collect();
    if train.is_empty() {
        return Err(TaciError::Data(csgi_core::Error::TooShort(
            "no training windows left after the validation split".into(),
        )));
    }
    Ok((train, val))
}

fn validation_loss(net: &TaciNet, driver: &[f64], target: &[f64], starts: &[usize]) -> Result<f64> {
    let cfg = net.config();
    let mut sse = 0.0;
    let mut count = 0usize;
    for chunk in starts.chunks(cfg.batch_size.max(256)) {
        let (d, t, f) = gather_windows(driver, target, chunk, cfg.seq_length, cfg.lag);
        let pred = net.predict(d, t)?;
        sse += pred.data().iter().zip(f.data()).map(|(p, a)| (p - a) * (p - a)).sum::<f64>();
        count += f.len();
    }
    Ok(sse / count as f64)
}

/// Fit `net` to predict `target` `lag` steps ahead from windows of
/// `driver` and `target`, with plateau learning-rate decay, early stopping
/// and restoration of the best-validation weights.
pub fn train_network(net: &mut TaciNet, driver: &[f64], target: &[f64], seed: u64, name: &str) -> Result<TrainingHistory> {
    let cfg = net.config().clone();
    if driver.len() != target.len() {
        return Err(TaciError::Data(csgi_core::Error::Incompatible(
            "driver and target lengths differ".into(),
        )));
    }
    let (mut train, val) = split_starts(target.len(), &cfg)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut graph_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    let mut adam = AdamState::new(net.params(), cfg.learning_rate);

    let mut history = TrainingHistory {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        learning_rate: Vec::new(),
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        stopped_early: false,
    };
    let mut best = net.params().clone();
    let mut plateau_best = f64::INFINITY;
    let mut plateau_wait = 0;
    let mut stop_wait = 0;

    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            train.shuffle(&mut shuffle_rng);
        }
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for chunk in train.chunks(cfg.batch_size) {
            let (d, t, f) = gather_windows(driver, target, chunk, cfg.seq_length, cfg.lag);
            let mut g = Graph::new(graph_rng.next_u64());
            let (dv, tv, fv) = (g.input(d), g.input(t), g.input(f));
            let pred = net.forward(&mut g, dv, tv, true)?;
            let loss = g.mse(pred, fv)?;
            let lv = g.value(loss).data()[0];
            if !lv.is_finite() {
                return Err(TaciError::Diverged { network: name.into(), epoch });
            }
            let grads = g.backward(loss)?;
            adam_step(net.params_mut(), &grads, &mut adam)?;
            loss_sum += lv * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = loss_sum / seen as f64;
        let val_loss = validation_loss(net, driver, target, &val)?;
        if !val_loss.is_finite() {
            return Err(TaciError::Diverged { network: name.into(), epoch });
        }
        history.train_loss.push(train_loss);
        history.val_loss.push(val_loss);
        history.learning_rate.push(adam.lr);
        debug!("{name} epoch {epoch}: train {train_loss:.6} val {val_loss:.6} lr {:.2e}", adam.lr);

        if val_loss < history.best_val_loss {
            history.best_val_loss = val_loss;
            history.best_epoch = epoch;
            best.copy_from(net.params())?;
            stop_wait = 0;
        } else {
            stop_wait += 1;
        }
        if val_loss < plateau_best {
            plateau_best = val_loss;
            plateau_wait = 0;
        } else {
            plateau_wait += 1;
            if plateau_wait >= cfg.plateau_patience {
                adam.lr = (adam.lr * cfg.plateau_factor).max(cfg.min_learning_rate);
                plateau_wait = 0;
            }
        }
        if stop_wait >= cfg.early_stop_patience {
            history.stopped_early = true;
            break;
        }
    }
    net.params_mut().copy_from(&best)?;
    info!(
        "{name}: best val loss {:.6} at epoch {} of {}",
        history.best_val_loss,
        history.best_epoch,
        history.train_loss.len()
    );
    Ok(history)
}

/// Which of the four networks of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkRole {
    /// (x, y) → future y
    XyFull,
    /// (x⁽ˢ⁾, y) → future y
    XySurrogate,
    /// (y, x) → future x
    YxFull,
    /// (y⁽ˢ⁾, x) → future x
    YxSurrogate,
}

impl NetworkRole {
    pub const ALL: [NetworkRole; 4] = [Self::XyFull, Self::XySurrogate, Self::YxFull, Self::YxSurrogate];

    pub fn name(self) -> &'static str {
        match self {
            Self::XyFull => "xy_full",
            Self::XySurrogate => "xy_surrogate",
            Self::YxFull => "yx_full",
            Self::YxSurrogate => "yx_surrogate",
        }
    }
}

/// Seeds that fully determine a model set given its config and data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSeeds {
    pub seed: u64,
    pub surrogate_x: u64,
    pub surrogate_y: u64,
    /// Shared by the full and surrogate network of direction x→y, so the
    /// two differ only in their driver input.
    pub init_xy: u64,
    pub init_yx: u64,
}

impl PairSeeds {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            seed,
            surrogate_x: derive_seed(seed, 11),
            surrogate_y: derive_seed(seed, 12),
            init_xy: derive_seed(seed, 21),
            init_yx: derive_seed(seed, 22),
        }
    }

    pub fn init(&self, role: NetworkRole) -> u64 {
        match role {
            NetworkRole::XyFull | NetworkRole::XySurrogate => self.init_xy,
            NetworkRole::YxFull | NetworkRole::YxSurrogate => self.init_yx,
        }
    }
}

/// The four networks trained for one variable pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TaciModelSet {
    pub config: TaciConfig,
    pub seeds: PairSeeds,
    pub networks: Vec<(NetworkRole, TaciNet)>,
    pub histories: Vec<(NetworkRole, TrainingHistory)>,
}

impl TaciModelSet {
    pub fn network(&self, role: NetworkRole) -> &TaciNet {
        &self.networks.iter().find(|(r, _)| *r == role).expect("all roles present").1
    }

    pub fn history(&self, role: NetworkRole) -> &TrainingHistory {
        &self.histories.iter().find(|(r, _)| *r == role).expect("all roles present").1
    }
}

/// Z-scored inputs of the four networks: `(x, y, x⁽ˢ⁾, y⁽ˢ⁾)`.
pub struct PairInputs {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl PairInputs {
    pub fn new(x: &TimeSeries, y: &TimeSeries, cfg: &TaciConfig, seeds: &PairSeeds) -> Result<Self> {
        if x.len() != y.len() {
            return Err(TaciError::Data(csgi_core::Error::Incompatible(format!(
                "x length {} != y length {}",
                x.len(),
                y.len()
            ))));
        }
        let xs = make_surrogate(x, cfg.surrogate, seeds.surrogate_x)?;
        let ys = make_surrogate(y, cfg.surrogate, seeds.surrogate_y)?;
        Ok(Self {
            x: zscore(x)?.into_values(),
            y: zscore(y)?.into_values(),
            xs: zscore(&xs)?.into_values(),
            ys: zscore(&ys)?.into_values(),
        })
    }

    /// `(driver, target)` of a network.
    pub fn for_role(&self, role: NetworkRole) -> (&[f64], &[f64]) {
        match role {
            NetworkRole::XyFull => (&self.x, &self.y),
            NetworkRole::XySurrogate => (&self.xs, &self.y),
            NetworkRole::YxFull => (&self.y, &self.x),
            NetworkRole::YxSurrogate => (&self.ys, &self.x),
        }
    }
}

/// Train the four networks of a pair. The surrogate always replaces the
/// candidate driver: for y→x the comparison is (y, x) against (y⁽ˢ⁾, x),
/// both predicting x.
pub fn train_pair(x: &TimeSeries, y: &TimeSeries, cfg: &TaciConfig, seed: u64) -> Result<TaciModelSet> {
    cfg.validate()?;
    if x.len() < cfg.min_series_len() {
        return Err(TaciError::Data(csgi_core::Error::TooShort(format!(
            "series length {} below 10·(seq_length + lag) = {}",
            x.len(),
            cfg.min_series_len()
        ))));
    }
    for ts in [x, y] {
        if let Ok(act) = autocorrelation_time(ts) {
            if cfg.seq_length <= act {
                warn!(
                    "seq_length {} does not exceed the autocorrelation time {act} of {}",
                    cfg.seq_length,
                    ts.label()
                );
            }
        }
    }
    let seeds = PairSeeds::from_seed(seed);
    let inputs = PairInputs::new(x, y, cfg, &seeds)?;
    let trained: Vec<(NetworkRole, TaciNet, TrainingHistory)> = NetworkRole::ALL
        .par_iter()
        .map(|&role| {
            let init = seeds.init(role);
            let mut net = TaciNet::new(cfg, init)?;
            let (driver, target) = inputs.for_role(role);
            let hist = train_network(&mut net, driver, target, init, role.name())?;
            Ok((role, net, hist))
        })
        .collect::<Result<_>>()?;
    let mut networks = Vec::new();
    let mut histories = Vec::new();
    for (role, net, hist) in trained {
        networks.push((role, net));
        histories.push((role, hist));
    }
    Ok(TaciModelSet {
        config: cfg.clone(),
        seeds,
        networks,
        histories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_line_up() {
        let d: Vec<f64> = (0..20).map(f64::from).collect();
        let t: Vec<f64> = (100..120).map(f64::from).collect();
        let (a, b, c) = gather_windows(&d, &t, &[0, 5], 4, 2);
        assert_eq!(a.data(), &[0., 1., 2., 3., 5., 6., 7., 8.]);
        assert_eq!(b.data(), &[100., 101., 102., 103., 105., 106., 107., 108.]);
        assert_eq!(c.data(), &[102., 103., 104., 105., 107., 108., 109., 110.]);
    }

    #[test]
    fn split_is_chronological_without_overlap() {
        let cfg = TaciConfig { train_stride: 3, ..TaciConfig::desk() };
        let (train, val) = split_starts(1000, &cfg).unwrap();
        let span = cfg.seq_length + cfg.lag;
        assert!(train.iter().all(|&s| s + span <= val[0]));
        assert!(*val.last().unwrap() + span <= 1000);
        let total = (1000 - span) / 3 + 1;
        assert_eq!(val.len(), (total as f64 * 0.2).ceil() as usize);
    }

    #[test]
    fn seeds_shared_within_direction() {
        let s = PairSeeds::from_seed(5);
        assert_eq!(s.init(NetworkRole::XyFull), s.init(NetworkRole::XySurrogate));
        assert_ne!(s.init(NetworkRole::XyFull), s.init(NetworkRole::YxFull));
        assert_ne!(s.surrogate_x, s.surrogate_y);
    }
}
