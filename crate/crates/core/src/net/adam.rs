use super::{Gradients, NetError, NetworkParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Weight of the `||W||^2` term in the objective.
    pub l2: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            l2: 1e-4,
        }
    }
}

/// First and second moment estimates, laid out like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &NetworkParams, config: AdamConfig) -> AdamState {
        let sizes: Vec<usize> = params.layers.iter().map(|l| l.param_count()).collect();
        AdamState {
            config,
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One bias-corrected Adam update. Gradients must already include any L2 term.
    pub fn step(&mut self, params: &mut NetworkParams, grads: &Gradients) -> Result<(), NetError> {
        if grads.layers.len() != params.layers.len()
            || grads
                .layers
                .iter()
                .zip(&params.layers)
                .any(|(g, p)| g.rows != p.rows || g.cols != p.cols)
        {
            return Err(NetError::ShapeMismatch("gradients do not match parameters".into()));
        }
        if !grads.is_finite() {
            return Err(NetError::NonFiniteGradient);
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            ..
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        let step_size = learning_rate / bc1;
        for (li, (layer, g)) in params.layers.iter_mut().zip(&grads.layers).enumerate() {
            let m = &mut self.m[li];
            let v = &mut self.v[li];
            let values = layer.weights.iter_mut().chain(layer.biases.iter_mut());
            let gs = g.weights.iter().chain(&g.biases);
            for (((theta, &gi), mi), vi) in values.zip(gs).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                *theta -= step_size * *mi / ((*vi / bc2).sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Architecture, Dense};

    fn tiny() -> NetworkParams {
        // Shape checks are bypassed: Adam only iterates the layers it is given.
        let mut p = NetworkParams::zeros(Architecture::PolicyValParts);
        p.layers = vec![Dense {
            rows: 1,
            cols: 1,
            weights: vec![0.5],
            biases: vec![0.0],
        }];
        p
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = tiny();
        let before = p.clone();
        let mut adam = AdamState::new(&p, AdamConfig::default());
        let g = Gradients::zeros_like(&p);
        adam.step(&mut p, &g).unwrap();
        assert_eq!(p, before);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = tiny();
        let cfg = AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        };
        let mut adam = AdamState::new(&p, cfg);
        let mut g = Gradients::zeros_like(&p);
        g.layers[0].weights[0] = 1.0;
        adam.step(&mut p, &g).unwrap();
        // m_hat = 1, v_hat = 1, so the step is -lr / (1 + eps).
        let delta = p.layers[0].weights[0] - 0.5;
        assert!((delta + 0.1 / (1.0 + 1e-8)).abs() < 1e-15, "{delta}");
    }

    #[test]
    fn non_finite_gradient_leaves_params() {
        let mut p = tiny();
        let before = p.clone();
        let mut adam = AdamState::new(&p, AdamConfig::default());
        let mut g = Gradients::zeros_like(&p);
        g.layers[0].biases[0] = f64::INFINITY;
        assert!(matches!(adam.step(&mut p, &g), Err(NetError::NonFiniteGradient)));
        assert_eq!(p, before);
        assert_eq!(adam.step, 0);
    }
}
