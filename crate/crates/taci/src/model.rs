//! The two-headed autoencoder.
//!
//! ```text
//! driver ─ noise ─ TCN ─ Conv1d(1) ─ pool ─ dense↓ ─┐
//!                                                   × ─ dense↑ ─ upsample ─ TCN ─ dense(1) → target future
//! target ─ noise ─ TCN ─ Conv1d(1) ─ pool ─ dense↓ ─┘
//! ```
//!
//! All tensors are `(batch, time, channels)`; dense layers act on the
//! channel axis at every (pooled) time step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use csgi_nn::{Conv1d, Dense, Graph, ParamSet, TcnBlock, Tensor, Var};

use crate::config::TaciConfig;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
struct Head {
    tcn: TcnBlock,
    conv: Conv1d,
    dense: Vec<Dense>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaciNet {
    cfg: TaciConfig,
    params: ParamSet,
    driver_head: Head,
    target_head: Head,
    decoder_dense: Vec<Dense>,
    decoder_tcn: TcnBlock,
    output: Dense,
}

fn build_head(params: &mut ParamSet, name: &str, cfg: &TaciConfig, rng: &mut ChaCha8Rng) -> Result<Head> {
    let tcn = TcnBlock::new(params, &format!("{name}.tcn"), cfg.ts_dimension, cfg.tcn_spec(), rng)?;
    let conv = Conv1d::new(params, &format!("{name}.conv"), cfg.nb_filters, cfg.nb_filters, 1, 1, rng);
    let mut dense = Vec::new();
    let mut width = cfg.nb_filters;
    for (i, &w) in cfg.encoder_widths.iter().enumerate() {
        dense.push(Dense::new(params, &format!("{name}.dense{i}"), width, w, rng));
        width = w;
    }
    Ok(Head { tcn, conv, dense })
}

impl TaciNet {
    /// Build a network with He-normal weights drawn from `seed`.
    pub fn new(cfg: &TaciConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let driver_head = build_head(&mut params, "driver", cfg, &mut rng)?;
        let target_head = build_head(&mut params, "target", cfg, &mut rng)?;
        let mut decoder_dense = Vec::new();
        let mut width = *cfg.encoder_widths.last().unwrap();
        for (i, &w) in cfg.decoder_widths.iter().enumerate() {
            decoder_dense.push(Dense::new(&mut params, &format!("decoder.dense{i}"), width, w, &mut rng));
            width = w;
        }
        let decoder_tcn = TcnBlock::new(&mut params, "decoder.tcn", width, cfg.tcn_spec(), &mut rng)?;
        let output = Dense::new(&mut params, "output", cfg.nb_filters, cfg.ts_dimension, &mut rng);
        Ok(Self {
            cfg: cfg.clone(),
            params,
            driver_head,
            target_head,
            decoder_dense,
            decoder_tcn,
            output,
        })
    }

    pub fn config(&self) -> &TaciConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.count()
    }

    fn encode(&self, g: &mut Graph, head: &Head, x: Var, training: bool) -> Result<Var> {
        let p = &self.params;
        let h = g.gaussian_noise(x, self.cfg.noise_sigma, training)?;
        let h = head.tcn.forward(g, p, h, training)?;
        let h = head.conv.forward(g, p, h)?;
        let h = g.elu(h)?;
        let mut h = g.avg_pool1d(h, self.cfg.latent_sample_rate)?;
        for d in &head.dense {
            h = d.forward(g, p, h)?;
            h = g.elu(h)?;
            h = g.dropout(h, self.cfg.dropout_rate_hidden, training)?;
        }
        Ok(h)
    }

    /// Latent of the driver head, `(batch, seq_length / rate, latent)`.
    pub fn encode_driver(&self, g: &mut Graph, x: Var, training: bool) -> Result<Var> {
        self.encode(g, &self.driver_head, x, training)
    }

    pub fn encode_target(&self, g: &mut Graph, x: Var, training: bool) -> Result<Var> {
        self.encode(g, &self.target_head, x, training)
    }

    /// Decoder applied to a merged latent.
    pub fn decode(&self, g: &mut Graph, latent: Var, training: bool) -> Result<Var> {
        let p = &self.params;
        let mut h = latent;
        for d in &self.decoder_dense {
            h = d.forward(g, p, h)?;
            h = g.elu(h)?;
            h = g.dropout(h, self.cfg.dropout_rate_hidden, training)?;
        }
        let h = g.upsample1d(h, self.cfg.latent_sample_rate)?;
        let h = self.decoder_tcn.forward(g, p, h, training)?;
        Ok(self.output.forward(g, p, h)?)
    }

    /// Predicted target window for a batch of `(driver, target)` input windows.
    pub fn forward(&self, g: &mut Graph, driver: Var, target: Var, training: bool) -> Result<Var> {
        let a = self.encode_driver(g, driver, training)?;
        let b = self.encode_target(g, target, training)?;
        let z = g.mul(a, b)?;
        self.decode(g, z, training)
    }

    /// Evaluation-mode prediction for a `(batch, seq_length, 1)` pair.
    pub fn predict(&self, driver: Tensor, target: Tensor) -> Result<Tensor> {
        let mut g = Graph::new(0);
        let d = g.input(driver);
        let t = g.input(target);
        let out = self.forward(&mut g, d, t, false)?;
        Ok(g.value(out).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(b: usize, n: usize, phase: f64) -> Tensor {
        Tensor::new(vec![b, n, 1], (0..b * n).map(|i| (i as f64 * 0.3 + phase).sin()).collect()).unwrap()
    }

    #[test]
    fn output_shape_matches_input() {
        for seq_length in [20, 50, 100] {
            let cfg = TaciConfig { seq_length, ..TaciConfig::desk() };
            let net = TaciNet::new(&cfg, 1).unwrap();
            let out = net.predict(batch(3, seq_length, 0.0), batch(3, seq_length, 1.0)).unwrap();
            assert_eq!(out.shape(), &[3, seq_length, 1]);
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let cfg = TaciConfig::default();
        let a = TaciNet::new(&cfg, 7).unwrap();
        let b = TaciNet::new(&cfg, 7).unwrap();
        assert_eq!(a.parameter_count(), b.parameter_count());
        assert_eq!(a.params(), b.params());
        assert_ne!(TaciNet::new(&cfg, 8).unwrap().params(), a.params());
    }

    #[test]
    fn unit_latent_is_multiplicative_identity() {
        let cfg = TaciConfig::desk();
        let net = TaciNet::new(&cfg, 3).unwrap();
        let mut g = Graph::new(0);
        let x = g.input(batch(2, 16, 0.5));
        let lat = net.encode_target(&mut g, x, false).unwrap();
        let ones = g.input(Tensor::full(g.value(lat).shape(), 1.0));
        let merged = g.mul(ones, lat).unwrap();
        let via_product = net.decode(&mut g, merged, false).unwrap();
        let direct = net.decode(&mut g, lat, false).unwrap();
        assert_eq!(g.value(via_product), g.value(direct));
    }

    #[test]
    fn evaluation_is_bitwise_repeatable() {
        let cfg = TaciConfig {
            noise_sigma: 0.3,
            dropout_rate_tcn: 0.2,
            dropout_rate_hidden: 0.2,
            ..TaciConfig::desk()
        };
        let net = TaciNet::new(&cfg, 4).unwrap();
        let a = net.predict(batch(2, 16, 0.0), batch(2, 16, 2.0)).unwrap();
        let b = net.predict(batch(2, 16, 0.0), batch(2, 16, 2.0)).unwrap();
        assert_eq!(a, b);
    }
}
