use super::{Dense, Gradients, Mlp, NnError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..Default::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 5e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for one [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub first: Vec<Dense>,
    pub second: Vec<Dense>,
}

/// One bias-corrected Adam update of `param` in place. `step` is the already
/// incremented step counter.
pub fn adam_update_slice(
    config: &AdamConfig,
    step: u64,
    param: &mut [f64],
    grad: &[f64],
    first: &mut [f64],
    second: &mut [f64],
) {
    let c1 = 1.0 - config.beta1.powf(step as f64);
    let c2 = 1.0 - config.beta2.powf(step as f64);
    for i in 0..param.len() {
        let g = grad[i];
        first[i] = config.beta1 * first[i] + (1.0 - config.beta1) * g;
        second[i] = config.beta2 * second[i] + (1.0 - config.beta2) * g * g;
        let m_hat = first[i] / c1;
        let v_hat = second[i] / c2;
        param[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        let zeros = || {
            net.layers()
                .iter()
                .map(|l| Dense::zeros(l.input_size(), l.output_size()))
                .collect::<Vec<_>>()
        };
        AdamState {
            config,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    /// Apply one update to `net`. Rejects non-finite gradients before touching
    /// any state.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<(), NnError> {
        if grads.layers.len() != net.layers().len()
            || self.first.len() != net.layers().len()
            || grads
                .layers
                .iter()
                .zip(net.layers())
                .any(|(g, l)| g.weights.dim() != l.weights.dim() || g.bias.dim() != l.bias.dim())
            || self
                .first
                .iter()
                .zip(net.layers())
                .any(|(m, l)| m.weights.dim() != l.weights.dim())
        {
            return Err(NnError::Shape(
                "gradients or moments do not match network".into(),
            ));
        }
        if !grads.is_finite() {
            return Err(NnError::NonFiniteGradient);
        }
        self.step += 1;
        let config = self.config;
        let step = self.step;
        for (((layer, g), m), v) in net
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            adam_update_slice(
                &config,
                step,
                layer.weights.as_slice_mut().expect("standard layout"),
                g.weights.as_slice().expect("standard layout"),
                m.weights.as_slice_mut().expect("standard layout"),
                v.weights.as_slice_mut().expect("standard layout"),
            );
            adam_update_slice(
                &config,
                step,
                layer.bias.as_slice_mut().expect("standard layout"),
                g.bias.as_slice().expect("standard layout"),
                m.bias.as_slice_mut().expect("standard layout"),
                v.bias.as_slice_mut().expect("standard layout"),
            );
        }
        if !net.is_finite() {
            return Err(NnError::NonFiniteParameter);
        }
        Ok(())
    }
}

/// Adam for a single scalar parameter (the SAC temperature).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarAdam {
    pub config: AdamConfig,
    pub step: u64,
    first: f64,
    second: f64,
}

impl ScalarAdam {
    pub fn new(config: AdamConfig) -> Self {
        ScalarAdam {
            config,
            step: 0,
            first: 0.0,
            second: 0.0,
        }
    }

    pub fn update(&mut self, param: &mut f64, grad: f64) -> Result<(), NnError> {
        if !grad.is_finite() {
            return Err(NnError::NonFiniteGradient);
        }
        self.step += 1;
        let mut p = [*param];
        let mut m = [self.first];
        let mut v = [self.second];
        adam_update_slice(&self.config, self.step, &mut p, &[grad], &mut m, &mut v);
        *param = p[0];
        self.first = m[0];
        self.second = v[0];
        Ok(())
    }
}
