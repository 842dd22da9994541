//! Layers that own parameters. Each layer registers its tensors in a
//! [`ParamSet`] at construction and records its forward pass on a [`Graph`].

use rand::Rng;

use crate::error::{NnError, Result};
use crate::graph::{Graph, Var};
use crate::params::{ParamId, ParamSet};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub inputs: usize,
    pub outputs: usize,
}

impl Dense {
    pub fn new<R: Rng>(params: &mut ParamSet, name: &str, inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let weight = params.add_glorot_uniform(format!("{name}.w"), &[inputs, outputs], inputs, outputs, rng);
        let bias = params.add(format!("{name}.b"), Tensor::zeros(&[outputs]));
        Self { weight, bias, inputs, outputs }
    }

    pub fn forward(&self, g: &mut Graph, params: &ParamSet, x: Var) -> Result<Var> {
        let w = g.param(params, self.weight);
        let b = g.param(params, self.bias);
        g.dense(x, w, Some(b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub weight: ParamId,
    pub bias: ParamId,
    pub kernel_size: usize,
    pub dilation: usize,
}

impl Conv1d {
    pub fn new<R: Rng>(
        params: &mut ParamSet,
        name: &str,
        inputs: usize,
        outputs: usize,
        kernel_size: usize,
        dilation: usize,
        rng: &mut R,
    ) -> Self {
        let weight = params.add_he_normal(
            format!("{name}.w"),
            &[kernel_size, inputs, outputs],
            kernel_size * inputs,
            rng,
        );
        let bias = params.add(format!("{name}.b"), Tensor::zeros(&[outputs]));
        Self { weight, bias, kernel_size, dilation }
    }

    pub fn forward(&self, g: &mut Graph, params: &ParamSet, x: Var) -> Result<Var> {
        let w = g.param(params, self.weight);
        let b = g.param(params, self.bias);
        g.conv1d(x, w, Some(b), self.dilation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcnSpec {
    pub nb_filters: usize,
    pub kernel_size: usize,
    pub dilations: Vec<usize>,
    pub nb_stacks: usize,
    pub dropout_rate: f64,
}

impl TcnSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nb_filters == 0 || self.kernel_size == 0 || self.nb_stacks == 0 {
            return Err(NnError::ConfigInvalid(
                "nb_filters, kernel_size and nb_stacks must be positive".into(),
            ));
        }
        if self.dilations.is_empty() || self.dilations.contains(&0) {
            return Err(NnError::ConfigInvalid("dilations must be a non-empty list of positive ints".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(NnError::ConfigInvalid(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    pub fn receptive_field(&self) -> usize {
        1 + self.nb_stacks * (self.kernel_size - 1) * self.dilations.iter().sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct TcnLevel {
    conv: Conv1d,
    residual: Option<Conv1d>,
}

/// Stack of dilated causal convolutions. Every level is
/// `conv → ELU → dropout` plus a residual path (1×1 conv when the channel
/// count changes).
#[derive(Debug, Clone, PartialEq)]
pub struct TcnBlock {
    pub spec: TcnSpec,
    levels: Vec<TcnLevel>,
}

impl TcnBlock {
    pub fn new<R: Rng>(params: &mut ParamSet, name: &str, inputs: usize, spec: TcnSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let mut levels = Vec::new();
        let mut channels = inputs;
        for s in 0..spec.nb_stacks {
            for (i, &d) in spec.dilations.iter().enumerate() {
                let lname = format!("{name}.s{s}.l{i}");
                let conv = Conv1d::new(params, &lname, channels, spec.nb_filters, spec.kernel_size, d, rng);
                let residual = (channels != spec.nb_filters)
                    .then(|| Conv1d::new(params, &format!("{lname}.res"), channels, spec.nb_filters, 1, 1, rng));
                levels.push(TcnLevel { conv, residual });
                channels = spec.nb_filters;
            }
        }
        Ok(Self { spec, levels })
    }

    pub fn receptive_field(&self) -> usize {
        self.spec.receptive_field()
    }

    pub fn out_channels(&self) -> usize {
        self.spec.nb_filters
    }

    pub fn forward(&self, g: &mut Graph, params: &ParamSet, x: Var, training: bool) -> Result<Var> {
        let mut h = x;
        for level in &self.levels {
            let c = level.conv.forward(g, params, h)?;
            let a = g.elu(c)?;
            let a = g.dropout(a, self.spec.dropout_rate, training)?;
            let skip = match &level.residual {
                Some(r) => r.forward(g, params, h)?,
                None => h,
            };
            h = g.add(a, skip)?;
        }
        Ok(h)
    }
}
