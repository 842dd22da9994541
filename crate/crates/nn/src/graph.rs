//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] records every operation of one forward pass together with
//! its output value. [`Graph::backward`] walks the tape in reverse,
//! accumulating gradients, and returns the gradients of every parameter
//! leaf. The tape is consumed by `backward`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{NnError, Result};
use crate::params::{ParamId, ParamSet};
use crate::tensor::Tensor;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    Conv1d {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        dilation: usize,
    },
    Dense {
        input: Var,
        weight: Var,
        bias: Option<Var>,
    },
    AvgPool {
        input: Var,
        rate: usize,
    },
    Upsample {
        input: Var,
        rate: usize,
    },
    /// Elementwise product with a constant (dropout masks).
    Scale {
        input: Var,
        mask: Vec<f64>,
    },
    /// Addition of a constant (injected noise); gradient passes through.
    Shift {
        input: Var,
    },
    Elu {
        input: Var,
    },
    Mul {
        a: Var,
        b: Var,
    },
    Add {
        a: Var,
        b: Var,
    },
    Sum {
        input: Var,
    },
    Mse {
        pred: Var,
        target: Var,
    },
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Gradients of parameter leaves, keyed by parameter.
#[derive(Debug, Default, Clone)]
pub struct Gradients {
    grads: BTreeMap<ParamId, Tensor>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.grads.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.grads.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.grads.values().all(Tensor::is_finite)
    }
}

pub struct Graph {
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new(0)
    }
}

fn shape_err<T>(msg: String) -> Result<T> {
    Err(NnError::ShapeMismatch(msg))
}

fn dims3(t: &Tensor, what: &str) -> Result<(usize, usize, usize)> {
    match *t.shape() {
        [b, n, c] => Ok((b, n, c)),
        _ => shape_err(format!("{what} expects (batch, time, channels), got {:?}", t.shape())),
    }
}

impl Graph {
    /// `seed` drives dropout masks and injected noise.
    pub fn new(seed: u64) -> Self {
        Self {
            nodes: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Input)
    }

    pub fn param(&mut self, params: &ParamSet, id: ParamId) -> Var {
        self.push(params.get(id).clone(), Op::Param(id))
    }

    /// Causal dilated convolution over the time axis.
    ///
    /// `weight` is `(kernel, in, out)` and tap `k` reads the input `k·dilation`
    /// steps in the past; the missing history is zero, so the output has the
    /// input's length and never depends on later inputs.
    pub fn conv1d(&mut self, input: Var, weight: Var, bias: Option<Var>, dilation: usize) -> Result<Var> {
        let (b, n, cin) = dims3(self.value(input), "conv1d")?;
        let w = self.value(weight);
        let [k, wi, cout] = *w.shape() else {
            return shape_err(format!("conv1d weight must be (kernel, in, out), got {:?}", w.shape()));
        };
        if wi != cin {
            return shape_err(format!("conv1d weight expects {wi} input channels, input has {cin}"));
        }
        if dilation == 0 {
            return shape_err("conv1d dilation must be >= 1".into());
        }
        if let Some(bv) = bias {
            if self.value(bv).shape() != [cout] {
                return shape_err(format!("conv1d bias must be ({cout},)"));
            }
        }
        let mut out = vec![0.0; b * n * cout];
        conv_forward(
            self.value(input).data(),
            w.data(),
            bias.map(|bv| self.value(bv).data()),
            &mut out,
            (b, n, cin, cout, k, dilation),
        );
        Ok(self.push(Tensor::new(vec![b, n, cout], out)?, Op::Conv1d { input, weight, bias, dilation }))
    }

    /// Affine map over the last axis: `(…, in) → (…, out)`, weight `(in, out)`.
    pub fn dense(&mut self, input: Var, weight: Var, bias: Option<Var>) -> Result<Var> {
        let x = self.value(input);
        let w = self.value(weight);
        let [wi, cout] = *w.shape() else {
            return shape_err(format!("dense weight must be (in, out), got {:?}", w.shape()));
        };
        let cin = x.last_dim();
        if cin != wi {
            return shape_err(format!("dense weight expects {wi} inputs, got {cin}"));
        }
        if let Some(bv) = bias {
            if self.value(bv).shape() != [cout] {
                return shape_err(format!("dense bias must be ({cout},)"));
            }
        }
        let rows = x.len() / cin;
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = cout;
        let mut out = vec![0.0; rows * cout];
        conv_forward(
            x.data(),
            w.data(),
            bias.map(|bv| self.value(bv).data()),
            &mut out,
            (1, rows, cin, cout, 1, 1),
        );
        Ok(self.push(Tensor::new(shape, out)?, Op::Dense { input, weight, bias }))
    }

    /// Non-overlapping mean over `rate` consecutive time steps.
    pub fn avg_pool1d(&mut self, input: Var, rate: usize) -> Result<Var> {
        let (b, n, c) = dims3(self.value(input), "avg_pool1d")?;
        if rate == 0 || n % rate != 0 {
            return shape_err(format!("pool rate {rate} must divide time length {n}"));
        }
        let m = n / rate;
        let x = self.value(input).data();
        let mut out = vec![0.0; b * m * c];
        let inv = 1.0 / rate as f64;
        for bi in 0..b {
            for j in 0..m {
                let o = &mut out[(bi * m + j) * c..][..c];
                for r in 0..rate {
                    let row = &x[(bi * n + j * rate + r) * c..][..c];
                    for (ov, xv) in o.iter_mut().zip(row) {
                        *ov += xv;
                    }
                }
                o.iter_mut().for_each(|v| *v *= inv);
            }
        }
        Ok(self.push(Tensor::new(vec![b, m, c], out)?, Op::AvgPool { input, rate }))
    }

    /// Repeat each time step `rate` times.
    pub fn upsample1d(&mut self, input: Var, rate: usize) -> Result<Var> {
        let (b, n, c) = dims3(self.value(input), "upsample1d")?;
        if rate == 0 {
            return shape_err("upsample rate must be >= 1".into());
        }
        let x = self.value(input).data();
        let mut out = Vec::with_capacity(b * n * rate * c);
        for bi in 0..b {
            for j in 0..n {
                let row = &x[(bi * n + j) * c..][..c];
                for _ in 0..rate {
                    out.extend_from_slice(row);
                }
            }
        }
        Ok(self.push(Tensor::new(vec![b, n * rate, c], out)?, Op::Upsample { input, rate }))
    }

    /// Inverted dropout: zero each element with probability `p` and scale
    /// survivors by `1/(1−p)`. Identity when not training or `p == 0`.
    pub fn dropout(&mut self, input: Var, p: f64, training: bool) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return shape_err(format!("dropout rate must be in [0, 1), got {p}"));
        }
        if !training || p == 0.0 {
            return Ok(input);
        }
        let keep = 1.0 / (1.0 - p);
        let n = self.value(input).len();
        let mask: Vec<f64> = (0..n)
            .map(|_| if self.rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let x = self.value(input);
        let out: Vec<f64> = x.data().iter().zip(&mask).map(|(a, m)| a * m).collect();
        let t = Tensor::new(x.shape().to_vec(), out)?;
        Ok(self.push(t, Op::Scale { input, mask }))
    }

    /// Additive zero-mean Gaussian noise; identity when not training.
    pub fn gaussian_noise(&mut self, input: Var, sigma: f64, training: bool) -> Result<Var> {
        if !(sigma >= 0.0) {
            return shape_err(format!("noise sigma must be >= 0, got {sigma}"));
        }
        if !training || sigma == 0.0 {
            return Ok(input);
        }
        let n = self.value(input).len();
        let noise: Vec<f64> = (0..n).map(|_| sigma * self.rng.sample::<f64, _>(StandardNormal)).collect();
        let x = self.value(input);
        let out = x.data().iter().zip(&noise).map(|(a, e)| a + e).collect();
        let t = Tensor::new(x.shape().to_vec(), out)?;
        Ok(self.push(t, Op::Shift { input }))
    }

    pub fn elu(&mut self, input: Var) -> Result<Var> {
        let x = self.value(input);
        let out = x.data().iter().map(|&v| if v > 0.0 { v } else { v.exp_m1() }).collect();
        let t = Tensor::new(x.shape().to_vec(), out)?;
        Ok(self.push(t, Op::Elu { input }))
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.value(a).shape() != self.value(b).shape() {
            return shape_err(format!(
                "{what}: {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            ));
        }
        Ok(())
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let (x, y) = (self.value(a), self.value(b));
        let out = x.data().iter().zip(y.data()).map(|(p, q)| p * q).collect();
        let t = Tensor::new(x.shape().to_vec(), out)?;
        Ok(self.push(t, Op::Mul { a, b }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let (x, y) = (self.value(a), self.value(b));
        let out = x.data().iter().zip(y.data()).map(|(p, q)| p + q).collect();
        let t = Tensor::new(x.shape().to_vec(), out)?;
        Ok(self.push(t, Op::Add { a, b }))
    }

    pub fn sum(&mut self, input: Var) -> Result<Var> {
        let s = self.value(input).data().iter().sum();
        Ok(self.push(Tensor::scalar(s), Op::Sum { input }))
    }

    /// Mean squared error over all elements.
    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        self.same_shape(pred, target, "mse")?;
        let (p, t) = (self.value(pred), self.value(target));
        let n = p.len() as f64;
        let s = p.data().iter().zip(t.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
        Ok(self.push(Tensor::scalar(s), Op::Mse { pred, target }))
    }

    /// Differentiate the scalar `loss` with respect to every recorded node
    /// and return the parameter gradients. Clears the tape.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.nodes.is_empty() || loss.0 >= self.nodes.len() {
            return Err(NnError::GraphNotBuilt);
        }
        if self.value(loss).len() != 1 {
            return shape_err(format!("loss must be a scalar, got {:?}", self.value(loss).shape()));
        }
        let nodes = std::mem::take(&mut self.nodes);
        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        let mut out = Gradients::default();

        fn acc(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&g),
                slot => *slot = Some(g),
            }
        }
        let like = |v: Var, data: Vec<f64>| Tensor::new(nodes[v.0].value.shape().to_vec(), data).expect("shape");

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let gd = g.data();
            match &nodes[idx].op {
                Op::Input => {}
                Op::Param(id) => match out.grads.get_mut(id) {
                    Some(existing) => existing.add_assign(&g),
                    None => {
                        out.grads.insert(*id, g);
                    }
                },
                Op::Conv1d { input, weight, bias, dilation } => {
                    let x = &nodes[input.0].value;
                    let w = &nodes[weight.0].value;
                    let (b, n, cin) = dims3(x, "conv1d")?;
                    let [k, _, cout] = *w.shape() else { unreachable!() };
                    let mut gx = vec![0.0; x.len()];
                    let mut gw = vec![0.0; w.len()];
                    let mut gb = bias.map(|_| vec![0.0; cout]);
                    conv_backward(
                        x.data(),
                        w.data(),
                        gd,
                        &mut gx,
                        &mut gw,
                        gb.as_deref_mut(),
                        (b, n, cin, cout, k, *dilation),
                    );
                    acc(&mut grads, *input, like(*input, gx));
                    acc(&mut grads, *weight, like(*weight, gw));
                    if let (Some(bv), Some(gb)) = (bias, gb) {
                        acc(&mut grads, *bv, like(*bv, gb));
                    }
                }
                Op::Dense { input, weight, bias } => {
                    let x = &nodes[input.0].value;
                    let w = &nodes[weight.0].value;
                    let [cin, cout] = *w.shape() else { unreachable!() };
                    let rows = x.len() / cin;
                    let mut gx = vec![0.0; x.len()];
                    let mut gw = vec![0.0; w.len()];
                    let mut gb = bias.map(|_| vec![0.0; cout]);
                    conv_backward(
                        x.data(),
                        w.data(),
                        gd,
                        &mut gx,
                        &mut gw,
                        gb.as_deref_mut(),
                        (1, rows, cin, cout, 1, 1),
                    );
                    acc(&mut grads, *input, like(*input, gx));
                    acc(&mut grads, *weight, like(*weight, gw));
                    if let (Some(bv), Some(gb)) = (bias, gb) {
                        acc(&mut grads, *bv, like(*bv, gb));
                    }
                }
                Op::AvgPool { input, rate } => {
                    let (b, n, c) = dims3(&nodes[input.0].value, "avg_pool1d")?;
                    let m = n / rate;
                    let inv = 1.0 / *rate as f64;
                    let mut gx = vec![0.0; b * n * c];
                    for bi in 0..b {
                        for j in 0..m {
                            let go = &gd[(bi * m + j) * c..][..c];
                            for r in 0..*rate {
                                let gi = &mut gx[(bi * n + j * rate + r) * c..][..c];
                                for (a, v) in gi.iter_mut().zip(go) {
                                    *a = v * inv;
                                }
                            }
                        }
                    }
                    acc(&mut grads, *input, like(*input, gx));
                }
                Op::Upsample { input, rate } => {
                    let (b, n, c) = dims3(&nodes[input.0].value, "upsample1d")?;
                    let mut gx = vec![0.0; b * n * c];
                    for bi in 0..b {
                        for j in 0..n {
                            let gi = &mut gx[(bi * n + j) * c..][..c];
                            for r in 0..*rate {
                                let go = &gd[(bi * n * rate + j * rate + r) * c..][..c];
                                for (a, v) in gi.iter_mut().zip(go) {
                                    *a += v;
                                }
                            }
                        }
                    }
                    acc(&mut grads, *input, like(*input, gx));
                }
                Op::Scale { input, mask } => {
                    let gx = gd.iter().zip(mask).map(|(a, m)| a * m).collect();
                    acc(&mut grads, *input, like(*input, gx));
                }
                Op::Shift { input } => acc(&mut grads, *input, like(*input, gd.to_vec())),
                Op::Elu { input } => {
                    let x = nodes[input.0].value.data();
                    let gx = gd
                        .iter()
                        .zip(x)
                        .map(|(g, &v)| if v > 0.0 { *g } else { g * v.exp() })
                        .collect();
                    acc(&mut grads, *input, like(*input, gx));
                }
                Op::Mul { a, b } => {
                    let (x, y) = (nodes[a.0].value.data(), nodes[b.0].value.data());
                    let ga = gd.iter().zip(y).map(|(g, v)| g * v).collect();
                    let gb = gd.iter().zip(x).map(|(g, v)| g * v).collect();
                    acc(&mut grads, *a, like(*a, ga));
                    acc(&mut grads, *b, like(*b, gb));
                }
                Op::Add { a, b } => {
                    acc(&mut grads, *a, like(*a, gd.to_vec()));
                    acc(&mut grads, *b, like(*b, gd.to_vec()));
                }
                Op::Sum { input } => {
                    let n = nodes[input.0].value.len();
                    acc(&mut grads, *input, like(*input, vec![gd[0]; n]));
                }
                Op::Mse { pred, target } => {
                    let (p, t) = (nodes[pred.0].value.data(), nodes[target.0].value.data());
                    let scale = 2.0 * gd[0] / p.len() as f64;
                    let gp: Vec<f64> = p.iter().zip(t).map(|(a, b)| scale * (a - b)).collect();
                    let gt = gp.iter().map(|v| -v).collect();
                    acc(&mut grads, *pred, like(*pred, gp));
                    acc(&mut grads, *target, like(*target, gt));
                }
            }
        }
        Ok(out)
    }
}

/// `(batch, time, in, out, kernel, dilation)`.
type ConvDims = (usize, usize, usize, usize, usize, usize);

fn conv_forward(x: &[f64], w: &[f64], bias: Option<&[f64]>, out: &mut [f64], dims: ConvDims) {
    let (b, n, cin, cout, k, d) = dims;
    for bi in 0..b {
        for t in 0..n {
            let o = &mut out[(bi * n + t) * cout..][..cout];
            if let Some(bias) = bias {
                o.copy_from_slice(bias);
            }
            for tap in 0..k {
                let Some(ts) = t.checked_sub(tap * d) else { break };
                let xr = &x[(bi * n + ts) * cin..][..cin];
                for (i, &a) in xr.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let wr = &w[(tap * cin + i) * cout..][..cout];
                    for (ov, wv) in o.iter_mut().zip(wr) {
                        *ov += a * wv;
                    }
                }
            }
        }
    }
}

fn conv_backward(
    x: &[f64],
    w: &[f64],
    gout: &[f64],
    gx: &mut [f64],
    gw: &mut [f64],
    mut gb: Option<&mut [f64]>,
    dims: ConvDims,
) {
    let (b, n, cin, cout, k, d) = dims;
    for bi in 0..b {
        for t in 0..n {
            let go = &gout[(bi * n + t) * cout..][..cout];
            if let Some(gb) = gb.as_deref_mut() {
                for (a, v) in gb.iter_mut().zip(go) {
                    *a += v;
                }
            }
            for tap in 0..k {
                let Some(ts) = t.checked_sub(tap * d) else { break };
                let base = (bi * n + ts) * cin;
                for i in 0..cin {
                    let a = x[base + i];
                    let off = (tap * cin + i) * cout;
                    let wr = &w[off..off + cout];
                    let gwr = &mut gw[off..off + cout];
                    let mut dot = 0.0;
                    for o in 0..cout {
                        dot += go[o] * wr[o];
                        gwr[o] += a * go[o];
                    }
                    gx[base + i] += dot;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t3(b: usize, n: usize, c: usize, v: Vec<f64>) -> Tensor {
        Tensor::new(vec![b, n, c], v).unwrap()
    }

    #[test]
    fn square_derivative() {
        let mut ps = ParamSet::new();
        let id = ps.add("w", Tensor::scalar(3.0));
        let mut g = Graph::new(0);
        let w = g.param(&ps, id);
        let sq = g.mul(w, w).unwrap();
        let loss = g.sum(sq).unwrap();
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(id).unwrap().data(), &[6.0]);
    }

    #[test]
    fn backward_consumes_tape() {
        let mut g = Graph::new(0);
        assert!(matches!(g.backward(Var(0)), Err(NnError::GraphNotBuilt)));
        let a = g.input(Tensor::scalar(2.0));
        let s = g.sum(a).unwrap();
        g.backward(s).unwrap();
        assert!(matches!(g.backward(s), Err(NnError::GraphNotBuilt)));
    }

    #[test]
    fn unit_kernel_is_identity() {
        for d in [1, 3, 7] {
            let mut g = Graph::new(0);
            let x = g.input(t3(1, 5, 1, vec![1.0, -2.0, 3.0, 0.5, 4.0]));
            let w = g.input(Tensor::new(vec![1, 1, 1], vec![1.0]).unwrap());
            let y = g.conv1d(x, w, None, d).unwrap();
            assert_eq!(g.value(y).data(), g.value(x).data());
        }
    }

    #[test]
    fn two_tap_kernel_delays_by_one() {
        let mut g = Graph::new(0);
        let x = g.input(t3(1, 4, 1, vec![0.0, 1.0, 2.0, 3.0]));
        let w = g.input(Tensor::new(vec![2, 1, 1], vec![0.0, 1.0]).unwrap());
        let y = g.conv1d(x, w, None, 1).unwrap();
        assert_eq!(g.value(y).data(), &[0.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn conv_is_causal() {
        let base: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let w = Tensor::new(vec![3, 1, 2], vec![0.3, -0.2, 0.5, 0.1, -0.4, 0.9]).unwrap();
        let run = |v: Vec<f64>| {
            let mut g = Graph::new(0);
            let x = g.input(t3(1, 12, 1, v));
            let wv = g.input(w.clone());
            let y = g.conv1d(x, wv, None, 2).unwrap();
            g.value(y).data().to_vec()
        };
        let before = run(base.clone());
        for t in 0..12 {
            let mut p = base.clone();
            p[t] += 1.0;
            let after = run(p);
            for s in 0..t {
                assert_eq!(before[2 * s..2 * s + 2], after[2 * s..2 * s + 2]);
            }
        }
    }

    #[test]
    fn pool_then_upsample() {
        let mut g = Graph::new(0);
        let x = g.input(t3(1, 4, 1, vec![1.0, 3.0, 5.0, 7.0]));
        let p = g.avg_pool1d(x, 2).unwrap();
        assert_eq!(g.value(p).data(), &[2.0, 6.0]);
        let u = g.upsample1d(p, 2).unwrap();
        assert_eq!(g.value(u).data(), &[2.0, 2.0, 6.0, 6.0]);
        assert!(g.avg_pool1d(x, 3).is_err());
    }

    #[test]
    fn dropout_and_noise_identities() {
        let mut g = Graph::new(1);
        let x = g.input(t3(2, 3, 2, (0..12).map(f64::from).collect()));
        let d = g.dropout(x, 0.0, true).unwrap();
        assert_eq!(g.value(d), g.value(x));
        let d = g.dropout(x, 0.5, false).unwrap();
        assert_eq!(g.value(d), g.value(x));
        let nz = g.gaussian_noise(x, 0.3, false).unwrap();
        assert_eq!(g.value(nz), g.value(x));
        let ones = g.input(Tensor::full(&[2, 3, 2], 1.0));
        let m = g.mul(x, ones).unwrap();
        assert_eq!(g.value(m).data(), g.value(x).data());
    }

    #[test]
    fn dropout_scales_survivors() {
        let mut g = Graph::new(2);
        let x = g.input(Tensor::full(&[1, 1000, 1], 1.0));
        let d = g.dropout(x, 0.25, true).unwrap();
        let vals = g.value(d).data();
        assert!(vals.iter().all(|&v| v == 0.0 || (v - 4.0 / 3.0).abs() < 1e-12));
        let zeros = vals.iter().filter(|&&v| v == 0.0).count();
        assert!((150..350).contains(&zeros));
    }

    #[test]
    fn mse_gradient_vanishes_at_target() {
        let mut ps = ParamSet::new();
        let id = ps.add("p", Tensor::new(vec![1, 3, 1], vec![0.5, -1.0, 2.0]).unwrap());
        let mut g = Graph::new(0);
        let p = g.param(&ps, id);
        let t = g.input(ps.get(id).clone());
        let l = g.mse(p, t).unwrap();
        let grads = g.backward(l).unwrap();
        assert!(grads.get(id).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let mut g = Graph::new(0);
        let x = g.input(t3(1, 4, 2, vec![0.0; 8]));
        let w = g.input(Tensor::zeros(&[2, 3, 1]));
        assert!(matches!(g.conv1d(x, w, None, 1), Err(NnError::ShapeMismatch(_))));
        let w = g.input(Tensor::zeros(&[3, 1]));
        assert!(matches!(g.dense(x, w, None), Err(NnError::ShapeMismatch(_))));
        let y = g.input(t3(1, 4, 1, vec![0.0; 4]));
        assert!(matches!(g.mul(x, y), Err(NnError::ShapeMismatch(_))));
    }
}
