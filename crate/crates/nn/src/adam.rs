use crate::error::{NnError, Result};
use crate::graph::Gradients;
use crate::params::ParamSet;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ParamSet, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.ids().map(|id| vec![0.0; params.get(id).len()]).collect();
        Self {
            step: 0,
            lr,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn first_moment(&self, index: usize) -> &[f64] {
        &self.m[index]
    }

    pub fn second_moment(&self, index: usize) -> &[f64] {
        &self.v[index]
    }
}

/// One bias-corrected Adam update. Parameters without a gradient are treated
/// as having a zero gradient.
pub fn adam_step(params: &mut ParamSet, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if state.m.len() != params.len() {
        return Err(NnError::ShapeMismatch(format!(
            "optimizer tracks {} tensors, model has {}",
            state.m.len(),
            params.len()
        )));
    }
    for id in params.ids() {
        let n = params.get(id).len();
        if state.m[id.index()].len() != n {
            return Err(NnError::ShapeMismatch(format!("moment size mismatch for {}", params.name(id))));
        }
        if let Some(g) = grads.get(id) {
            if g.shape() != params.get(id).shape() {
                return Err(NnError::ShapeMismatch(format!(
                    "gradient shape {:?} for {} with shape {:?}",
                    g.shape(),
                    params.name(id),
                    params.get(id).shape()
                )));
            }
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    for id in params.ids() {
        let i = id.index();
        let g = grads.get(id).map(|g| g.data());
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        let p = params.get_mut(id).data_mut();
        for j in 0..p.len() {
            let gj = g.map_or(0.0, |g| g[j]);
            m[j] = BETA1 * m[j] + (1.0 - BETA1) * gj;
            v[j] = BETA2 * v[j] + (1.0 - BETA2) * gj * gj;
            let mh = m[j] / c1;
            let vh = v[j] / c2;
            p[j] -= state.lr * mh / (vh.sqrt() + EPSILON);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::tensor::Tensor;

    fn grad_of_linear(ps: &ParamSet, scale: f64) -> Gradients {
        // d/dw (scale · w) = scale
        let id = ps.ids().next().unwrap();
        let mut g = Graph::new(0);
        let w = g.param(ps, id);
        let c = g.input(Tensor::scalar(scale));
        let p = g.mul(w, c).unwrap();
        let s = g.sum(p).unwrap();
        g.backward(s).unwrap()
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut ps = ParamSet::new();
        let id = ps.add("w", Tensor::scalar(0.5));
        let mut st = AdamState::new(&ps, 0.001);
        let grads = grad_of_linear(&ps, 1.0);
        adam_step(&mut ps, &grads, &mut st).unwrap();
        // m̂ = 1, v̂ = 1 → Δ = lr / (1 + ε)
        let expected = 0.5 - 0.001 / (1.0 + EPSILON);
        assert!((ps.get(id).data()[0] - expected).abs() < 1e-15);
        assert!((st.first_moment(0)[0] - 0.1).abs() < 1e-15);
        assert!((st.second_moment(0)[0] - 0.001).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_parameter() {
        let mut ps = ParamSet::new();
        let id = ps.add("w", Tensor::scalar(2.0));
        let mut st = AdamState::new(&ps, 0.01);
        let g1 = grad_of_linear(&ps, 1.0);
        adam_step(&mut ps, &g1, &mut st).unwrap();
        let after_one = ps.get(id).data()[0];
        let (m, v) = (st.first_moment(0)[0], st.second_moment(0)[0]);
        let mut st0 = AdamState::new(&ps, 0.01);
        let g0 = grad_of_linear(&ps, 0.0);
        adam_step(&mut ps, &g0, &mut st0).unwrap();
        assert_eq!(ps.get(id).data()[0], after_one);
        adam_step(&mut ps, &Gradients::default(), &mut st).unwrap();
        assert!((st.first_moment(0)[0] - BETA1 * m).abs() < 1e-18);
        assert!((st.second_moment(0)[0] - BETA2 * v).abs() < 1e-18);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut ps = ParamSet::new();
            ps.add("w", Tensor::scalar(1.0));
            let mut st = AdamState::new(&ps, 0.1);
            for _ in 0..2 {
                let g = grad_of_linear(&ps, 0.7);
                adam_step(&mut ps, &g, &mut st).unwrap();
            }
            ps
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch() {
        let mut ps = ParamSet::new();
        ps.add("w", Tensor::scalar(1.0));
        let mut st = AdamState::new(&ps, 0.1);
        ps.add("u", Tensor::scalar(1.0));
        assert!(matches!(
            adam_step(&mut ps, &Gradients::default(), &mut st),
            Err(NnError::ShapeMismatch(_))
        ));
    }
}
