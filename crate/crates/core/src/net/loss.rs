use super::forward::ForwardTrace;
use super::{Dense, NetError, NetworkParams};
use crate::features::{MoveIndex, GLOBAL_RANGE, PIECE_RANGE, SQUARE_RANGE};

/// Sparse policy label: probabilities over legal move indices.
pub type PolicyTarget = [(MoveIndex, f64)];

/// `total = mse + ce + lambda * l2`, with `l2` the squared weight norm.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub mse: f64,
    pub ce: f64,
    pub l2: f64,
}

impl LossBreakdown {
    pub fn new(mse: f64, ce: f64, l2: f64, lambda: f64) -> LossBreakdown {
        LossBreakdown {
            total: mse + ce + lambda * l2,
            mse,
            ce,
            l2,
        }
    }
}

/// Position of each target index within the trace's legal list.
fn target_slots(trace: &ForwardTrace, target: &PolicyTarget) -> Result<Vec<(usize, f64)>, NetError> {
    target
        .iter()
        .filter(|(_, p)| *p != 0.0)
        .map(|&(i, p)| {
            trace
                .legal
                .binary_search(&i)
                .map(|slot| (slot, p))
                .map_err(|_| NetError::TargetOutsideMask(i.get()))
        })
        .collect()
}

/// Data part of the objective for one example: `(value - z)^2` and the
/// cross-entropy of the masked log-softmax against `target`.
pub(crate) fn data_loss(trace: &ForwardTrace, target: &PolicyTarget, z: f64) -> Result<(f64, f64), NetError> {
    let mse = (trace.output.value - z).powi(2);
    let ce = -target_slots(trace, target)?
        .into_iter()
        .map(|(slot, p)| p * trace.log_probs[slot])
        .sum::<f64>();
    Ok((mse, ce))
}

impl NetworkParams {
    pub fn loss(
        &self,
        trace: &ForwardTrace,
        target: &PolicyTarget,
        z: f64,
        lambda: f64,
    ) -> Result<LossBreakdown, NetError> {
        let (mse, ce) = data_loss(trace, target, z)?;
        Ok(LossBreakdown::new(mse, ce, self.weight_norm_sq(), lambda))
    }

    /// Exact gradient of the full objective for one example.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        target: &PolicyTarget,
        z: f64,
        lambda: f64,
    ) -> Result<Gradients, NetError> {
        let mut grads = Gradients::zeros_like(self);
        self.accumulate_gradients(trace, target, z, 1.0, &mut grads)?;
        grads.add_l2(self, lambda);
        Ok(grads)
    }

    /// Adds `scale * d(mse + ce)/d(theta)` for one example into `grads`.
    pub fn accumulate_gradients(
        &self,
        trace: &ForwardTrace,
        target: &PolicyTarget,
        z: f64,
        scale: f64,
        grads: &mut Gradients,
    ) -> Result<(), NetError> {
        let t = self.topo();
        let slots = target_slots(trace, target)?;
        let target_mass: f64 = slots.iter().map(|(_, p)| p).sum();

        // d ce / d logit_j = p_j * sum(pi) - pi_j.
        let mut dlogits: Vec<f64> = trace
            .output
            .policy
            .iter()
            .map(|(_, p)| scale * p * target_mass)
            .collect();
        for (slot, p) in slots {
            dlogits[slot] -= scale * p;
        }

        let out = &self.layers[t.policy_out];
        let g_out = &mut grads.layers[t.policy_out];
        let mut d_hidden = vec![0.0; out.cols];
        for (&idx, &d) in trace.legal.iter().zip(&dlogits) {
            if d == 0.0 {
                continue;
            }
            let r = idx.get();
            g_out.biases[r] += d;
            let grow = &mut g_out.weights[r * out.cols..(r + 1) * out.cols];
            for (g, h) in grow.iter_mut().zip(&trace.policy_hidden) {
                *g += d * h;
            }
            for (dh, w) in d_hidden.iter_mut().zip(out.row(r)) {
                *dh += d * w;
            }
        }
        relu_mask(&mut d_hidden, &trace.policy_hidden);
        let mut d_policy_trunk = vec![0.0; trace.policy_trunk.len()];
        dense_backward(
            &self.layers[t.policy_hidden],
            &mut grads.layers[t.policy_hidden],
            &d_hidden,
            &trace.policy_trunk,
            Some(&mut d_policy_trunk),
        );

        let v = trace.output.value;
        let dv = scale * 2.0 * (v - z) * (1.0 - v * v);
        let value_trunk = if t.shared_trunk() {
            &trace.policy_trunk
        } else {
            &trace.value_trunk
        };
        let vo = &self.layers[t.value_out];
        grads.layers[t.value_out].biases[0] += dv;
        let mut d_value_hidden = vec![0.0; vo.cols];
        for ((g, h), (dh, w)) in grads.layers[t.value_out]
            .weights
            .iter_mut()
            .zip(&trace.value_hidden)
            .zip(d_value_hidden.iter_mut().zip(vo.row(0)))
        {
            *g += dv * h;
            *dh = dv * w;
        }
        relu_mask(&mut d_value_hidden, &trace.value_hidden);
        let mut d_value_trunk = vec![0.0; value_trunk.len()];
        dense_backward(
            &self.layers[t.value_hidden],
            &mut grads.layers[t.value_hidden],
            &d_value_hidden,
            value_trunk,
            Some(&mut d_value_trunk),
        );

        if t.shared_trunk() {
            for (a, b) in d_policy_trunk.iter_mut().zip(&d_value_trunk) {
                *a += b;
            }
            self.trunk_backward(t.policy_trunk, t.parts, d_policy_trunk, &trace.policy_trunk, &trace.input, grads);
        } else {
            self.trunk_backward(t.policy_trunk, t.parts, d_policy_trunk, &trace.policy_trunk, &trace.input, grads);
            self.trunk_backward(t.value_trunk, t.parts, d_value_trunk, &trace.value_trunk, &trace.input, grads);
        }
        Ok(())
    }

    fn trunk_backward(
        &self,
        first: usize,
        parts: bool,
        mut d_out: Vec<f64>,
        activations: &[f64],
        input: &[f64],
        grads: &mut Gradients,
    ) {
        relu_mask(&mut d_out, activations);
        if parts {
            let mut offset = 0;
            for (k, range) in [GLOBAL_RANGE, PIECE_RANGE, SQUARE_RANGE].into_iter().enumerate() {
                let layer = &self.layers[first + k];
                dense_backward(
                    layer,
                    &mut grads.layers[first + k],
                    &d_out[offset..offset + layer.rows],
                    &input[range],
                    None,
                );
                offset += layer.rows;
            }
        } else {
            dense_backward(&self.layers[first], &mut grads.layers[first], &d_out, input, None);
        }
    }
}

/// Zeroes gradient entries whose ReLU output was inactive.
fn relu_mask(d: &mut [f64], activations: &[f64]) {
    for (g, a) in d.iter_mut().zip(activations) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Gradients of `out = W x + b` given `d_out`; optionally propagates to `d_in`.
fn dense_backward(layer: &Dense, grad: &mut Dense, d_out: &[f64], x: &[f64], mut d_in: Option<&mut [f64]>) {
    let cols = layer.cols;
    for (r, &d) in d_out.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        grad.biases[r] += d;
        let grow = &mut grad.weights[r * cols..(r + 1) * cols];
        for (g, xi) in grow.iter_mut().zip(x) {
            *g += d * xi;
        }
        if let Some(d_in) = d_in.as_deref_mut() {
            for (di, w) in d_in.iter_mut().zip(layer.row(r)) {
                *di += d * w;
            }
        }
    }
}

/// Gradient buffers shaped like [`NetworkParams::layers`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(params: &NetworkParams) -> Gradients {
        Gradients {
            layers: params
                .layers
                .iter()
                .map(|l| Dense::zeros(l.rows, l.cols))
                .collect(),
        }
    }

    pub fn clear(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(0.0);
            l.biases.fill(0.0);
        }
    }

    /// Adds the gradient of `lambda * ||W||^2`, i.e. `2 lambda W`, to weights only.
    pub fn add_l2(&mut self, params: &NetworkParams, lambda: f64) {
        if lambda == 0.0 {
            return;
        }
        for (g, p) in self.layers.iter_mut().zip(&params.layers) {
            for (gw, w) in g.weights.iter_mut().zip(&p.weights) {
                *gw += 2.0 * lambda * w;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|x| x.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::Board;
    use crate::features::{extract_features, LegalMask};
    use crate::net::Architecture;

    fn uniform_target(trace: &ForwardTrace) -> Vec<(MoveIndex, f64)> {
        let k = trace.legal.len() as f64;
        trace.legal.iter().map(|&i| (i, 1.0 / k)).collect()
    }

    #[test]
    fn uniform_prediction_against_uniform_target() {
        let p = NetworkParams::zeros(Architecture::PolicyValParts);
        let b = Board::startpos();
        let trace = p
            .forward_trace(&extract_features(&b), &LegalMask::for_board(&b))
            .unwrap();
        let target = uniform_target(&trace);
        let l = p.loss(&trace, &target, 1.0, 0.0).unwrap();
        assert!((l.total - (1.0 + 20f64.ln())).abs() < 1e-12, "{l:?}");
    }

    #[test]
    fn perfect_prediction_has_zero_loss_and_gradient() {
        // Zero weights give value 0 and, with a one-move mask, probability 1.
        let p = NetworkParams::zeros(Architecture::SeparateFull);
        let only = MoveIndex::new(796).unwrap();
        let mask: LegalMask = [only].into_iter().collect();
        let trace = p
            .forward_trace(&extract_features(&Board::startpos()), &mask)
            .unwrap();
        let target = [(only, 1.0)];
        let l = p.loss(&trace, &target, 0.0, 0.0).unwrap();
        assert_eq!(l.total, 0.0);
        let g = p.backward(&trace, &target, 0.0, 0.0).unwrap();
        assert!(g.norm() < 1e-8);
    }

    #[test]
    fn l2_only_loss_and_linearity() {
        let p = NetworkParams::init(Architecture::PolicyValFull, 5);
        let only = MoveIndex::new(796).unwrap();
        let mask: LegalMask = [only].into_iter().collect();
        let trace = p
            .forward_trace(&extract_features(&Board::startpos()), &mask)
            .unwrap();
        let z = trace.output.value;
        let target = [(only, 1.0)];
        let lambda = 1e-3;
        let l = p.loss(&trace, &target, z, lambda).unwrap();
        let expected = lambda * p.weight_norm_sq();
        assert!((l.total - expected).abs() <= 1e-12 * expected);

        let g0 = p.backward(&trace, &target, z, 0.0).unwrap();
        let g1 = p.backward(&trace, &target, z, lambda).unwrap();
        let g2 = p.backward(&trace, &target, z, 2.0 * lambda).unwrap();
        for layer in 0..p.layers.len() {
            for k in (0..p.layers[layer].weights.len()).step_by(997) {
                let a = g1.layers[layer].weights[k] - g0.layers[layer].weights[k];
                let b = g2.layers[layer].weights[k] - g0.layers[layer].weights[k];
                assert!((b - 2.0 * a).abs() <= 1e-12 * a.abs().max(1e-300), "layer {layer} k {k}");
            }
        }
    }

    #[test]
    fn target_outside_mask_is_an_error() {
        let p = NetworkParams::zeros(Architecture::PolicyValParts);
        let b = Board::startpos();
        let trace = p
            .forward_trace(&extract_features(&b), &LegalMask::for_board(&b))
            .unwrap();
        let bad = [(MoveIndex::new(0).unwrap(), 1.0)];
        assert!(matches!(
            p.loss(&trace, &bad, 0.0, 0.0),
            Err(NetError::TargetOutsideMask(0))
        ));
    }

    #[test]
    fn decomposition_identity() {
        let p = NetworkParams::init(Architecture::SeparateParts, 8);
        let b = Board::startpos();
        let trace = p
            .forward_trace(&extract_features(&b), &LegalMask::for_board(&b))
            .unwrap();
        let target = uniform_target(&trace);
        let lambda = 1e-4;
        let l = p.loss(&trace, &target, -0.5, lambda).unwrap();
        let rebuilt = l.mse + l.ce + lambda * l.l2;
        assert!((l.total - rebuilt).abs() <= 1e-9 * l.total.abs());
    }
}
