//! Feed-forward policy/value networks over the 353-slot feature vector.
//!
//! All four architectures share the same building blocks: a first-layer
//! "trunk" (either three section-wise dense layers whose outputs are
//! concatenated, or one dense layer over the whole input), a policy head
//! `trunk -> 2048 -> 5120` and a value head `trunk -> 512 -> 1`. The
//! `Separate*` variants give the value head its own trunk.

mod adam;
mod forward;
mod io;
mod loss;

pub use adam::{AdamConfig, AdamState};
pub use forward::{ForwardTrace, NetworkOutput};
pub use io::{
    decode_weights, encode_weights, load_weights, load_weights_as, save_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION,
};
pub use loss::{Gradients, LossBreakdown, PolicyTarget};
pub(crate) use loss::data_loss;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::features::{FEATURE_DIM, GLOBAL_RANGE, PIECE_RANGE, POLICY_DIM, SQUARE_RANGE};

pub const H1A: usize = 32;
pub const H1B: usize = 512;
pub const H1C: usize = 480;
pub const H1: usize = 1024;
pub const H2P: usize = 2048;
pub const H2E: usize = 512;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("non-finite value in network input")]
    NonFiniteInput,
    #[error("non-finite gradient; parameters left unchanged")]
    NonFiniteGradient,
    #[error("policy target puts mass on index {0}, which is masked out")]
    TargetOutsideMask(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("weights file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Architecture {
    /// Shared section-wise trunk with policy and value heads.
    PolicyValParts,
    /// Shared dense trunk with policy and value heads.
    PolicyValFull,
    /// Independent section-wise trunks for policy and value.
    SeparateParts,
    /// Independent dense trunks for policy and value.
    SeparateFull,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [
        Architecture::PolicyValParts,
        Architecture::PolicyValFull,
        Architecture::SeparateParts,
        Architecture::SeparateFull,
    ];

    pub fn tag(self) -> u8 {
        match self {
            Architecture::PolicyValParts => 0,
            Architecture::PolicyValFull => 1,
            Architecture::SeparateParts => 2,
            Architecture::SeparateFull => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Architecture> {
        Architecture::ALL.into_iter().find(|a| a.tag() == tag)
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::PolicyValParts => "policy-val-parts",
            Architecture::PolicyValFull => "policy-val-full",
            Architecture::SeparateParts => "separate-parts",
            Architecture::SeparateFull => "separate-full",
        }
    }

    fn is_parts(self) -> bool {
        matches!(self, Architecture::PolicyValParts | Architecture::SeparateParts)
    }

    fn is_separate(self) -> bool {
        matches!(self, Architecture::SeparateParts | Architecture::SeparateFull)
    }

    /// `(rows, cols)` of every layer in storage order.
    pub fn layer_shapes(self) -> Vec<(usize, usize)> {
        let trunk: Vec<(usize, usize)> = if self.is_parts() {
            vec![
                (H1A, GLOBAL_RANGE.len()),
                (H1B, PIECE_RANGE.len()),
                (H1C, SQUARE_RANGE.len()),
            ]
        } else {
            vec![(H1, FEATURE_DIM)]
        };
        let mut shapes = trunk.clone();
        shapes.push((H2P, H1));
        shapes.push((POLICY_DIM, H2P));
        if self.is_separate() {
            shapes.extend(trunk);
        }
        shapes.push((H2E, H1));
        shapes.push((1, H2E));
        shapes
    }

    pub(crate) fn topology(self) -> Topology {
        let trunk_len = if self.is_parts() { 3 } else { 1 };
        let policy_trunk = 0;
        let policy_hidden = trunk_len;
        let policy_out = trunk_len + 1;
        let value_trunk = if self.is_separate() { trunk_len + 2 } else { 0 };
        let value_hidden = if self.is_separate() {
            2 * trunk_len + 2
        } else {
            trunk_len + 2
        };
        Topology {
            parts: self.is_parts(),
            policy_trunk,
            value_trunk,
            policy_hidden,
            policy_out,
            value_hidden,
            value_out: value_hidden + 1,
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown architecture {s:?}"))
    }
}

/// Layer indices into [`NetworkParams::layers`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct Topology {
    pub parts: bool,
    /// First trunk layer of each path; equal when the trunk is shared.
    pub policy_trunk: usize,
    pub value_trunk: usize,
    pub policy_hidden: usize,
    pub policy_out: usize,
    pub value_hidden: usize,
    pub value_out: usize,
}

impl Topology {
    pub fn shared_trunk(&self) -> bool {
        self.policy_trunk == self.value_trunk
    }

    #[cfg(test)]
    pub fn trunk_len(&self) -> usize {
        if self.parts {
            3
        } else {
            1
        }
    }
}

/// Fully connected layer, `out = W x + b` with `W` row-major `rows x cols`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Dense {
        Dense {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            biases: vec![0.0; rows],
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.weights[r * self.cols..(r + 1) * self.cols]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    arch: Architecture,
    pub layers: Vec<Dense>,
}

impl NetworkParams {
    pub fn zeros(arch: Architecture) -> NetworkParams {
        let layers = arch
            .layer_shapes()
            .into_iter()
            .map(|(r, c)| Dense::zeros(r, c))
            .collect();
        NetworkParams { arch, layers }
    }

    /// He-initialised weights (zero-mean normal, variance `2 / fan_in`), zero biases.
    pub fn init(arch: Architecture, seed: u64) -> NetworkParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = NetworkParams::zeros(arch);
        for layer in &mut params.layers {
            let normal = Normal::new(0.0, (2.0 / layer.cols as f64).sqrt()).unwrap();
            for w in &mut layer.weights {
                *w = normal.sample(&mut rng);
            }
        }
        params
    }

    pub(crate) fn from_layers(arch: Architecture, layers: Vec<Dense>) -> Result<NetworkParams, NetError> {
        let expected = arch.layer_shapes();
        let actual: Vec<_> = layers.iter().map(|l| (l.rows, l.cols)).collect();
        if expected != actual {
            return Err(NetError::ShapeMismatch(format!(
                "{arch} expects layers {expected:?}, found {actual:?}"
            )));
        }
        Ok(NetworkParams { arch, layers })
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .map(|w| w * w)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|x| x.is_finite()))
    }
}
