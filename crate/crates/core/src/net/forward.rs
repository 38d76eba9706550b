use super::{Dense, NetError, NetworkParams, Topology};
use crate::features::{FeatureVector, LegalMask, MoveIndex, GLOBAL_RANGE, PIECE_RANGE, POLICY_DIM, SQUARE_RANGE};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `relu(W x + b)` written into `out`.
fn dense_relu(layer: &Dense, x: &[f64], out: &mut Vec<f64>) {
    out.extend((0..layer.rows).map(|r| (dot(layer.row(r), x) + layer.biases[r]).max(0.0)));
}

/// Output of the first layer(s): ReLU activations of size `H1`.
pub(crate) fn trunk(params: &NetworkParams, first: usize, parts: bool, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(super::H1);
    if parts {
        dense_relu(&params.layers[first], &x[GLOBAL_RANGE], &mut out);
        dense_relu(&params.layers[first + 1], &x[PIECE_RANGE], &mut out);
        dense_relu(&params.layers[first + 2], &x[SQUARE_RANGE], &mut out);
    } else {
        dense_relu(&params.layers[first], x, &mut out);
    }
    out
}

/// Network prediction restricted to the legal moves of a position.
#[derive(Clone, Debug)]
pub struct NetworkOutput {
    /// Probabilities of the set mask bits, ascending index; sums to 1.
    pub policy: Vec<(MoveIndex, f64)>,
    /// Position value for the side to move, in (-1, 1).
    pub value: f64,
}

impl NetworkOutput {
    /// Full 5120-entry distribution with exact zeros on masked indices.
    pub fn dense_policy(&self) -> Vec<f64> {
        let mut out = vec![0.0; POLICY_DIM];
        for &(i, p) in &self.policy {
            out[i.get()] = p;
        }
        out
    }
}

/// Intermediate activations kept for back-propagation.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub(crate) input: Vec<f64>,
    pub(crate) policy_trunk: Vec<f64>,
    /// Empty when the trunk is shared with the policy path.
    pub(crate) value_trunk: Vec<f64>,
    pub(crate) policy_hidden: Vec<f64>,
    pub(crate) value_hidden: Vec<f64>,
    pub(crate) legal: Vec<MoveIndex>,
    pub(crate) logits: Vec<f64>,
    pub(crate) log_probs: Vec<f64>,
    pub output: NetworkOutput,
}

impl ForwardTrace {
    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn legal(&self) -> &[MoveIndex] {
        &self.legal
    }
}

/// Numerically stable log-softmax.
pub(crate) fn log_softmax(logits: &[f64]) -> Vec<f64> {
    if logits.is_empty() {
        return Vec::new();
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

impl NetworkParams {
    pub(crate) fn topo(&self) -> Topology {
        self.architecture().topology()
    }

    /// Evaluates the network. Only masked-in policy logits are computed; masked
    /// indices get probability exactly 0.
    pub fn forward(&self, x: &FeatureVector, mask: &LegalMask) -> Result<NetworkOutput, NetError> {
        Ok(self.forward_trace(x, mask)?.output)
    }

    pub fn forward_trace(&self, x: &FeatureVector, mask: &LegalMask) -> Result<ForwardTrace, NetError> {
        let input = x.as_slice();
        if input.iter().any(|v| !v.is_finite()) {
            return Err(NetError::NonFiniteInput);
        }
        let t = self.topo();
        let policy_trunk = trunk(self, t.policy_trunk, t.parts, input);
        let value_trunk = if t.shared_trunk() {
            Vec::new()
        } else {
            trunk(self, t.value_trunk, t.parts, input)
        };

        let mut policy_hidden = Vec::with_capacity(super::H2P);
        dense_relu(&self.layers[t.policy_hidden], &policy_trunk, &mut policy_hidden);

        let out_layer = &self.layers[t.policy_out];
        let legal: Vec<MoveIndex> = mask.iter().collect();
        let logits: Vec<f64> = legal
            .iter()
            .map(|i| dot(out_layer.row(i.get()), &policy_hidden) + out_layer.biases[i.get()])
            .collect();
        let log_probs = log_softmax(&logits);
        let policy = legal
            .iter()
            .zip(&log_probs)
            .map(|(&i, lp)| (i, lp.exp()))
            .collect();

        let vt = if t.shared_trunk() { &policy_trunk } else { &value_trunk };
        let mut value_hidden = Vec::with_capacity(super::H2E);
        dense_relu(&self.layers[t.value_hidden], vt, &mut value_hidden);
        let vl = &self.layers[t.value_out];
        let value = (dot(vl.row(0), &value_hidden) + vl.biases[0]).tanh();

        Ok(ForwardTrace {
            input: input.to_vec(),
            policy_trunk,
            value_trunk,
            policy_hidden,
            value_hidden,
            legal,
            logits,
            log_probs,
            output: NetworkOutput { policy, value },
        })
    }
}
