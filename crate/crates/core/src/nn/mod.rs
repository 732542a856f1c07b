//! Dense multilayer perceptrons with hand-written backpropagation and Adam.
//!
//! Hidden layers use `tanh`, the output layer is linear. Batches are rows of
//! an `ndarray` matrix.

mod adam;
mod snapshot;

pub use adam::{adam_update_slice, AdamConfig, AdamState, ScalarAdam};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("forward cache does not belong to this network")]
    CacheMismatch,
    #[error("non-finite gradient encountered")]
    NonFiniteGradient,
    #[error("non-finite parameter after update")]
    NonFiniteParameter,
    #[error("malformed parameter snapshot: {0}")]
    BadSnapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `(out, in)`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            weights: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    pub fn input_size(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_size(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Post-activation outputs of every layer for one batch; `activations[0]` is
/// the input itself.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations
            .last()
            .expect("cache holds at least the input")
    }

    pub fn input(&self) -> &Array2<f64> {
        &self.activations[0]
    }
}

/// Gradients with respect to every layer, plus the gradient with respect to
/// the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
    pub input: Array2<f64>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite())
        })
    }

    pub fn add_assign(&mut self, other: &Gradients) -> Result<(), NnError> {
        if self.layers.len() != other.layers.len() {
            return Err(NnError::Shape("gradient layer counts differ".into()));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            if a.weights.dim() != b.weights.dim() {
                return Err(NnError::Shape("gradient shapes differ".into()));
            }
            a.weights += &b.weights;
            a.bias += &b.bias;
        }
        Ok(())
    }
}

impl Mlp {
    /// Uniform initialization in `±1/sqrt(fan_in)` for weights and biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self, NnError> {
        let mut net = Mlp::zeros(sizes)?;
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.input_size() as f64).sqrt();
            layer
                .weights
                .mapv_inplace(|_| rng.random_range(-bound..bound));
            layer.bias.mapv_inplace(|_| rng.random_range(-bound..bound));
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self, NnError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(NnError::Shape(format!(
                "need at least two positive layer sizes, got {sizes:?}"
            )));
        }
        let layers = sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(Mlp { layers })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::Shape("network has no layers".into()));
        }
        for w in layers.windows(2) {
            if w[0].output_size() != w[1].input_size() {
                return Err(NnError::Shape("layer sizes do not chain".into()));
            }
        }
        if layers.iter().any(|l| l.bias.len() != l.output_size()) {
            return Err(NnError::Shape(
                "bias length differs from layer output".into(),
            ));
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_size()];
        sizes.extend(self.layers.iter().map(Dense::output_size));
        sizes
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input_size()
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map(Dense::output_size).unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite())
        })
    }

    /// Single-sample forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        let x = ArrayView2::from_shape((1, input.len()), input)
            .map_err(|e| NnError::Shape(e.to_string()))?;
        Ok(self.predict_batch(x)?.into_raw_vec_and_offset().0)
    }

    /// Batched forward pass without keeping intermediate activations.
    pub fn predict_batch(&self, input: ArrayView2<f64>) -> Result<Array2<f64>, NnError> {
        self.check_input(input.ncols())?;
        let last = self.layers.len() - 1;
        let mut x = input.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            x = affine(&x, layer);
            if i < last {
                x.mapv_inplace(fast_tanh);
            }
        }
        Ok(x)
    }

    /// Batched forward pass that keeps what [`Mlp::backward`] needs.
    pub fn forward_batch(&self, input: ArrayView2<f64>) -> Result<ForwardCache, NnError> {
        self.check_input(input.ncols())?;
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = affine(activations.last().unwrap(), layer);
            if i < last {
                z.mapv_inplace(fast_tanh);
            }
            activations.push(z);
        }
        Ok(ForwardCache { activations })
    }

    /// Reverse accumulation of `grad_output` (d loss / d output, one row per
    /// sample) through the cached forward pass.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_output: ArrayView2<f64>,
    ) -> Result<Gradients, NnError> {
        if cache.activations.len() != self.layers.len() + 1
            || cache
                .activations
                .iter()
                .zip(self.layer_sizes())
                .any(|(a, n)| a.ncols() != n)
        {
            return Err(NnError::CacheMismatch);
        }
        if grad_output.dim() != cache.output().dim() {
            return Err(NnError::Shape(format!(
                "output gradient {:?} vs output {:?}",
                grad_output.dim(),
                cache.output().dim()
            )));
        }
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        let mut delta = grad_output.to_owned();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let a_in = &cache.activations[l];
            let weights = matmul(delta.t(), a_in.view());
            let bias = delta.sum_axis(Axis(0));
            grads.push(Dense { weights, bias });
            let mut prev = matmul(delta.view(), layer.weights.view());
            if l > 0 {
                ndarray::Zip::from(&mut prev)
                    .and(a_in)
                    .for_each(|d, &a| *d *= 1.0 - a * a);
            }
            delta = prev;
        }
        grads.reverse();
        Ok(Gradients {
            layers: grads,
            input: delta,
        })
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.input_size(), l.output_size()))
                .collect(),
            input: Array2::zeros((0, self.input_size())),
        }
    }

    /// Polyak averaging: `self = tau * src + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, src: &Mlp, tau: f64) -> Result<(), NnError> {
        self.check_same_shape(src)?;
        for (d, s) in self.layers.iter_mut().zip(&src.layers) {
            d.weights
                .zip_mut_with(&s.weights, |a, &b| *a = tau * b + (1.0 - tau) * *a);
            d.bias
                .zip_mut_with(&s.bias, |a, &b| *a = tau * b + (1.0 - tau) * *a);
        }
        Ok(())
    }

    pub fn check_same_shape(&self, other: &Mlp) -> Result<(), NnError> {
        if self.layer_sizes() != other.layer_sizes() {
            return Err(NnError::Shape(format!(
                "{:?} vs {:?}",
                self.layer_sizes(),
                other.layer_sizes()
            )));
        }
        Ok(())
    }

    fn check_input(&self, n: usize) -> Result<(), NnError> {
        if n != self.input_size() {
            return Err(NnError::Shape(format!(
                "input has {n} features, network expects {}",
                self.input_size()
            )));
        }
        Ok(())
    }
}

/// Copy every parameter of `src` into `dst`. Both must have the same shape.
pub fn copy_params(src: &Mlp, dst: &mut Mlp) -> Result<(), NnError> {
    dst.check_same_shape(src)?;
    for (d, s) in dst.layers.iter_mut().zip(&src.layers) {
        d.weights.assign(&s.weights);
        d.bias.assign(&s.bias);
    }
    Ok(())
}

/// tanh through a single `exp`, about four times cheaper than `f64::tanh`.
/// Absolute error stays around 1e-16.
#[inline]
pub fn fast_tanh(x: f64) -> f64 {
    let x = x.clamp(-20.0, 20.0);
    1.0 - 2.0 / ((2.0 * x).exp() + 1.0)
}

/// `a . b` written into a row-major array, so callers can take rows as slices.
fn matmul(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    ndarray::linalg::general_mat_mul(1.0, &a, &b, 0.0, &mut out);
    out
}

fn affine(x: &Array2<f64>, layer: &Dense) -> Array2<f64> {
    let mut z = matmul(x.view(), layer.weights.t());
    z += &layer.bias;
    z
}
