//! Central finite-difference checks of every op's backward pass.
//!
//! [`run`] draws random small configurations cycling over all layer kinds
//! and reports the worst per-tensor relative gradient error of each.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, Var};
use crate::layers::{Conv1d, Dense, TcnBlock, TcnSpec};
use crate::params::ParamSet;
use crate::tensor::Tensor;

pub const STEP: f64 = 1e-5;
/// Acceptable relative error between analytic and numeric gradients.
pub const TOL: f64 = 1e-4;
const GRAPH_SEED: u64 = 42;

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

type Build<'a> = dyn Fn(&mut Graph, &ParamSet) -> Var + 'a;

/// Projects the output onto a fixed random tensor so every output element
/// contributes to the scalar loss.
fn loss_of(build: &Build, params: &ParamSet, proj: &Tensor) -> (Graph, Var) {
    let mut g = Graph::new(GRAPH_SEED);
    let out = build(&mut g, params);
    let out = if g.value(out).len() == 1 {
        out
    } else {
        let p = g.input(proj.clone().reshape(g.value(out).shape().to_vec()).unwrap());
        let m = g.mul(out, p).unwrap();
        g.sum(m).unwrap()
    };
    (g, out)
}

/// Largest per-tensor relative error ‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖).
fn max_rel_error(build: &Build, params: &ParamSet, rng: &mut ChaCha8Rng) -> f64 {
    let out_len = {
        let mut g = Graph::new(GRAPH_SEED);
        let v = build(&mut g, params);
        g.value(v).len()
    };
    let proj = random_tensor(rng, &[out_len]);
    let (mut g, loss) = loss_of(build, params, &proj);
    let grads = g.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    let mut p = params.clone();
    for id in params.ids() {
        let zeros = Tensor::zeros(params.get(id).shape());
        let analytic = grads.get(id).unwrap_or(&zeros).data().to_vec();
        let mut numeric = vec![0.0; analytic.len()];
        for j in 0..analytic.len() {
            let orig = p.get(id).data()[j];
            p.get_mut(id).data_mut()[j] = orig + STEP;
            let (g1, l1) = loss_of(build, &p, &proj);
            let up = g1.value(l1).data()[0];
            p.get_mut(id).data_mut()[j] = orig - STEP;
            let (g2, l2) = loss_of(build, &p, &proj);
            let down = g2.value(l2).data()[0];
            p.get_mut(id).data_mut()[j] = orig;
            numeric[j] = (up - down) / (2.0 * STEP);
        }
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let scale = norm(&analytic).max(norm(&numeric));
        if scale > 1e-10 {
            worst = worst.max(norm(&diff) / scale);
        }
    }
    worst
}

/// One random small configuration of layer `kind`; returns the parameter
/// set (inputs are registered as parameters so their gradients are checked
/// too) and the forward builder.
fn config(kind: usize, rng: &mut ChaCha8Rng) -> (String, ParamSet, Box<Build<'static>>) {
    let b = rng.random_range(1..=2);
    let n = rng.random_range(2..=4) * 2;
    let c = rng.random_range(1..=3);
    let mut ps = ParamSet::new();
    let x = ps.add("x", random_tensor(rng, &[b, n, c]));
    match kind {
        0 => {
            let out = rng.random_range(1..=3);
            let d = Dense::new(&mut ps, "d", c, out, rng);
            ps.get_mut(d.bias).data_mut().iter_mut().for_each(|v| *v = 0.1);
            (
                format!("dense {c}->{out}"),
                ps,
                Box::new(move |g, p| {
                    let xv = g.param(p, x);
                    d.forward(g, p, xv).unwrap()
                }),
            )
        }
        1 => {
            let k = rng.random_range(1..=3);
            let dil = rng.random_range(1..=3);
            let out = rng.random_range(1..=3);
            let conv = Conv1d::new(&mut ps, "c", c, out, k, dil, rng);
            (
                format!("conv1d k={k} d={dil}"),
                ps,
                Box::new(move |g, p| {
                    let xv = g.param(p, x);
                    conv.forward(g, p, xv).unwrap()
                }),
            )
        }
        2 => (
            "avg_pool1d".into(),
            ps,
            Box::new(move |g, p| {
                let xv = g.param(p, x);
                g.avg_pool1d(xv, 2).unwrap()
            }),
        ),
        3 => (
            "upsample1d".into(),
            ps,
            Box::new(move |g, p| {
                let xv = g.param(p, x);
                g.upsample1d(xv, 3).unwrap()
            }),
        ),
        4 => (
            "elu".into(),
            ps,
            Box::new(move |g, p| {
                let xv = g.param(p, x);
                g.elu(xv).unwrap()
            }),
        ),
        5 => {
            let y = ps.add("y", random_tensor(rng, &[b, n, c]));
            (
                "elementwise mul".into(),
                ps,
                Box::new(move |g, p| {
                    let (xv, yv) = (g.param(p, x), g.param(p, y));
                    g.mul(xv, yv).unwrap()
                }),
            )
        }
        6 => {
            let y = ps.add("y", random_tensor(rng, &[b, n, c]));
            (
                "add".into(),
                ps,
                Box::new(move |g, p| {
                    let (xv, yv) = (g.param(p, x), g.param(p, y));
                    g.add(xv, yv).unwrap()
                }),
            )
        }
        7 => (
            "dropout (training)".into(),
            ps,
            Box::new(move |g, p| {
                let xv = g.param(p, x);
                g.dropout(xv, 0.3, true).unwrap()
            }),
        ),
        8 => (
            "gaussian noise (training)".into(),
            ps,
            Box::new(move |g, p| {
                let xv = g.param(p, x);
                let nz = g.gaussian_noise(xv, 0.2, true).unwrap();
                // square so the gradient depends on the injected noise
                g.mul(nz, nz).unwrap()
            }),
        ),
        9 => {
            let y = ps.add("y", random_tensor(rng, &[b, n, c]));
            (
                "mse".into(),
                ps,
                Box::new(move |g, p| {
                    let (xv, yv) = (g.param(p, x), g.param(p, y));
                    g.mse(xv, yv).unwrap()
                }),
            )
        }
        10 => {
            let spec = TcnSpec {
                nb_filters: rng.random_range(1..=3),
                kernel_size: rng.random_range(1..=3),
                dilations: vec![1, 2],
                nb_stacks: rng.random_range(1..=2),
                dropout_rate: 0.2,
            };
            let tcn = TcnBlock::new(&mut ps, "t", c, spec, rng).unwrap();
            (
                "tcn block".into(),
                ps,
                Box::new(move |g, p| {
                    let xv = g.param(p, x);
                    tcn.forward(g, p, xv, true).unwrap()
                }),
            )
        }
        _ => {
            // conv → ELU → pool → dense → upsample → product with a second head
            let hidden = rng.random_range(1..=3);
            let conv = Conv1d::new(&mut ps, "c", c, hidden, 2, 1, rng);
            let d = Dense::new(&mut ps, "d", hidden, 2, rng);
            let z = ps.add("z", random_tensor(rng, &[b, n, 2]));
            (
                "composed 3-layer net".into(),
                ps,
                Box::new(move |g, p| {
                    let xv = g.param(p, x);
                    let h = conv.forward(g, p, xv).unwrap();
                    let h = g.elu(h).unwrap();
                    let h = g.avg_pool1d(h, 2).unwrap();
                    let h = d.forward(g, p, h).unwrap();
                    let h = g.upsample1d(h, 2).unwrap();
                    let zv = g.param(p, z);
                    g.mul(h, zv).unwrap()
                }),
            )
        }
    }
}

/// Number of distinct layer kinds exercised by [`run`].
pub const KINDS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub trial: usize,
    pub layer: String,
    pub rel_error: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.rel_error < TOL
    }
}

/// Check `trials` random configurations; trial `i` uses layer kind `i % KINDS`.
pub fn run(trials: usize, seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|trial| {
            let (layer, ps, build) = config(trial % KINDS, &mut rng);
            let rel_error = max_rel_error(build.as_ref(), &ps, &mut rng);
            CheckResult { trial, layer, rel_error }
        })
        .collect()
}
