use serde::{Deserialize, Serialize};

use csgi_core::SurrogateKind;
use csgi_nn::TcnSpec;

use crate::error::{Result, TaciError};

/// Hyperparameters of one TACI model set.
///
/// `Default` reproduces the published parameter table where it gives a
/// value; [`TaciConfig::desk`] is a much smaller network that trains in
/// minutes on one CPU core.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaciConfig {
    pub nb_filters: usize,
    pub kernel_size: usize,
    pub dilations: Vec<usize>,
    pub nb_stacks: usize,
    /// Channels per input series. Only 1 is supported.
    pub ts_dimension: usize,
    pub dropout_rate_tcn: f64,
    pub dropout_rate_hidden: f64,
    /// Pooling factor between the convolutional and dense stages.
    pub latent_sample_rate: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle: bool,
    /// Std of the Gaussian noise added to both inputs while training.
    pub noise_sigma: f64,
    /// Rolling-window length for CSGI evaluation.
    pub window_len: usize,
    pub seq_length: usize,
    /// Prediction horizon: the target window starts `lag` steps after the
    /// input window.
    pub lag: usize,
    /// Dense widths of each encoder head, decreasing; the last is the latent size.
    pub encoder_widths: Vec<usize>,
    /// Dense widths of the decoder, increasing.
    pub decoder_widths: Vec<usize>,
    pub learning_rate: f64,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub min_learning_rate: f64,
    pub early_stop_patience: usize,
    /// Trailing fraction of sequences held out for validation.
    pub validation_fraction: f64,
    /// Step between consecutive training sequences (1 uses every start).
    pub train_stride: usize,
    pub surrogate: SurrogateKind,
}

impl Default for TaciConfig {
    fn default() -> Self {
        Self {
            nb_filters: 32,
            kernel_size: 32,
            dilations: vec![1, 2, 4, 8, 16, 32],
            nb_stacks: 1,
            ts_dimension: 1,
            dropout_rate_tcn: 0.0,
            dropout_rate_hidden: 0.0,
            latent_sample_rate: 2,
            epochs: 300,
            batch_size: 512,
            shuffle: true,
            noise_sigma: 0.0,
            window_len: 1000,
            seq_length: 50,
            lag: 10,
            encoder_widths: vec![64, 32, 16],
            decoder_widths: vec![16, 32, 64],
            learning_rate: 1e-3,
            plateau_patience: 10,
            plateau_factor: 0.5,
            min_learning_rate: 1e-6,
            early_stop_patience: 25,
            validation_fraction: 0.2,
            train_stride: 1,
            surrogate: SurrogateKind::UniformRandom,
        }
    }
}

impl TaciConfig {
    /// Small preset for one-step-ahead prediction of maps on a single core.
    pub fn desk() -> Self {
        Self {
            nb_filters: 8,
            kernel_size: 3,
            dilations: vec![1, 2, 4],
            seq_length: 16,
            lag: 1,
            encoder_widths: vec![16, 8],
            decoder_widths: vec![8, 16],
            epochs: 60,
            batch_size: 64,
            learning_rate: 3e-3,
            train_stride: 4,
            ..Self::default()
        }
    }

    pub fn tcn_spec(&self) -> TcnSpec {
        TcnSpec {
            nb_filters: self.nb_filters,
            kernel_size: self.kernel_size,
            dilations: self.dilations.clone(),
            nb_stacks: self.nb_stacks,
            dropout_rate: self.dropout_rate_tcn,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TaciError::ConfigInvalid(m));
        self.tcn_spec()
            .validate()
            .map_err(|e| TaciError::ConfigInvalid(e.to_string()))?;
        if self.ts_dimension != 1 {
            return bad(format!("ts_dimension {} unsupported (only 1)", self.ts_dimension));
        }
        if self.seq_length < 2 || self.lag == 0 {
            return bad("seq_length must be >= 2 and lag >= 1".into());
        }
        if self.latent_sample_rate == 0 || !self.seq_length.is_multiple_of(self.latent_sample_rate) {
            return bad(format!(
                "latent_sample_rate {} must divide seq_length {}",
                self.latent_sample_rate, self.seq_length
            ));
        }
        if self.encoder_widths.is_empty() || self.decoder_widths.is_empty() {
            return bad("encoder and decoder need at least one dense layer".into());
        }
        if self.encoder_widths.contains(&0) || self.decoder_widths.contains(&0) {
            return bad("dense widths must be positive".into());
        }
        if self.encoder_widths.windows(2).any(|w| w[1] > w[0]) {
            return bad(format!("encoder widths {:?} must not increase", self.encoder_widths));
        }
        if self.decoder_widths.windows(2).any(|w| w[1] < w[0]) {
            return bad(format!("decoder widths {:?} must not decrease", self.decoder_widths));
        }
        if !(0.0..1.0).contains(&self.dropout_rate_hidden) {
            return bad(format!("dropout_rate_hidden {} outside [0, 1)", self.dropout_rate_hidden));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma {} must be finite and >= 0", self.noise_sigma));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.train_stride == 0 {
            return bad("epochs, batch_size and train_stride must be positive".into());
        }
        if self.window_len < 10 {
            return bad(format!("window_len {} must be >= 10", self.window_len));
        }
        if !(self.learning_rate > 0.0 && self.min_learning_rate > 0.0) {
            return bad("learning rates must be positive".into());
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return bad(format!("plateau_factor {} outside (0, 1)", self.plateau_factor));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!("validation_fraction {} outside (0, 1)", self.validation_fraction));
        }
        Ok(())
    }

    /// Shortest series `train_pair` accepts.
    pub fn min_series_len(&self) -> usize {
        10 * (self.seq_length + self.lag)
    }
}
