//! Dense multilayer perceptron: parameters, initialization, forward pass and
//! Adam updates.
//!
//! A network with layer dims `[d0, d1, ..., dL]` has `L` weight matrices,
//! `weights[l]` of shape `(d_{l+1} × d_l)`, and matching bias vectors. Hidden
//! layers apply ReLU; the final layer is affine so that standardized
//! regression targets (which can be negative) are representable.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;

/// Layer weights and biases of the regression network.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_dims: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    seed: u64,
}

impl Mlp {
    /// Initialize a network with uniform Glorot-style weights on
    /// `[-√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out))]` and zero biases.
    /// Deterministic for a fixed seed.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::invalid(format!(
                "need at least an input and an output layer, got dims {layer_dims:?}"
            )));
        }
        if layer_dims.contains(&0) {
            return Err(Error::invalid(format!(
                "all layer dims must be >= 1, got {layer_dims:?}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for w in layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut mat = Array2::zeros((fan_out, fan_in));
            for v in mat.iter_mut() {
                *v = rng.random_range(-bound..=bound);
            }
            weights.push(mat);
            biases.push(Array1::zeros(fan_out));
        }
        Ok(Mlp {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            seed,
        })
    }

    /// Build directly from parts (mainly for tests and deserialization).
    pub fn from_parts(
        layer_dims: Vec<usize>,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
        seed: u64,
    ) -> Result<Self> {
        if layer_dims.len() < 2 || weights.len() != layer_dims.len() - 1 {
            return Err(Error::shape(format!(
                "{} weight matrices do not match dims {layer_dims:?}",
                weights.len()
            )));
        }
        if weights.len() != biases.len() {
            return Err(Error::shape(format!(
                "{} weight matrices vs {} bias vectors",
                weights.len(),
                biases.len()
            )));
        }
        for (l, (w, b)) in weights.iter().zip(biases.iter()).enumerate() {
            if w.dim() != (layer_dims[l + 1], layer_dims[l]) || b.len() != layer_dims[l + 1] {
                return Err(Error::shape(format!(
                    "layer {l}: weights {:?} / bias {} vs dims ({}, {})",
                    w.dim(),
                    b.len(),
                    layer_dims[l + 1],
                    layer_dims[l]
                )));
            }
        }
        Ok(Mlp {
            layer_dims,
            weights,
            biases,
            seed,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Array1<f64>] {
        &mut self.biases
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Evaluate one input row.
    pub fn forward_row(&self, x: &ArrayView1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(format!(
                "input width {} vs layer_dims[0] = {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut h = x.to_owned();
        let last = self.num_layers() - 1;
        for (l, (w, b)) in self.weights.iter().zip(self.biases.iter()).enumerate() {
            let mut z = Array1::zeros(w.nrows());
            for (o, wrow) in w.rows().into_iter().enumerate() {
                z[o] = dot(&wrow, &h.view()) + b[o];
            }
            if l != last {
                z.mapv_inplace(relu);
            }
            h = z;
        }
        Ok(h)
    }

    /// Evaluate a batch (rows are samples). Row `k` of the result is exactly
    /// `forward_row` of row `k`.
    pub fn forward(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        let trace = self.forward_trace(x)?;
        Ok(trace.output())
    }

    /// Forward pass keeping per-layer pre-activations and activations for
    /// backpropagation.
    pub(crate) fn forward_trace(&self, x: &ArrayView2<f64>) -> Result<ForwardTrace> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(format!(
                "input width {} vs layer_dims[0] = {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let n = x.nrows();
        let last = self.num_layers() - 1;
        let mut activations: Vec<Array2<f64>> = vec![x.to_owned()];
        let mut pre: Vec<Array2<f64>> = Vec::with_capacity(self.num_layers());
        for (l, (w, b)) in self.weights.iter().zip(self.biases.iter()).enumerate() {
            let h = activations.last().unwrap();
            let mut z = Array2::zeros((n, w.nrows()));
            for k in 0..n {
                let hrow = h.row(k);
                for (o, wrow) in w.rows().into_iter().enumerate() {
                    z[[k, o]] = dot(&wrow, &hrow) + b[o];
                }
            }
            let a = if l != last { z.mapv(relu) } else { z.clone() };
            pre.push(z);
            activations.push(a);
        }
        Ok(ForwardTrace { activations, pre })
    }
}

pub(crate) fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub(crate) struct ForwardTrace {
    /// `activations[0]` is the input; `activations[l+1]` the output of layer `l`.
    pub activations: Vec<Array2<f64>>,
    /// Pre-activation of each layer.
    pub pre: Vec<Array2<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> Array2<f64> {
        self.activations.last().unwrap().clone()
    }
}

/// Parameter-shaped gradients.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Gradients {
            weights: mlp.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            biases: mlp.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Bias-corrected Adam state, shaped like the parameters it updates.
#[derive(Debug, Clone)]
pub struct AdamState {
    m_weights: Vec<Array2<f64>>,
    v_weights: Vec<Array2<f64>>,
    m_biases: Vec<Array1<f64>>,
    v_biases: Vec<Array1<f64>>,
    step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(mlp: &Mlp, learning_rate: f64) -> Self {
        AdamState {
            m_weights: mlp.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            v_weights: mlp.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            m_biases: mlp.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            v_biases: mlp.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// One Adam update, in place. Deterministic.
    pub fn step(&mut self, mlp: &mut Mlp, grads: &Gradients) -> Result<()> {
        if grads.weights.len() != mlp.weights.len() {
            return Err(Error::shape("gradient/parameter layer count mismatch"));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for l in 0..mlp.weights.len() {
            if grads.weights[l].dim() != mlp.weights[l].dim() {
                return Err(Error::shape(format!("gradient shape mismatch at layer {l}")));
            }
            adam_update(
                mlp.weights[l].as_slice_mut().unwrap(),
                grads.weights[l].as_slice().unwrap(),
                self.m_weights[l].as_slice_mut().unwrap(),
                self.v_weights[l].as_slice_mut().unwrap(),
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.epsilon,
                bc1,
                bc2,
            );
            adam_update(
                mlp.biases[l].as_slice_mut().unwrap(),
                grads.biases[l].as_slice().unwrap(),
                self.m_biases[l].as_slice_mut().unwrap(),
                self.v_biases[l].as_slice_mut().unwrap(),
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.epsilon,
                bc1,
                bc2,
            );
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Per-column z-score transform recorded when a dataset is standardized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: f64,
    pub std: f64,
}

/// JSON document persisting a trained model together with the input
/// standardization it was trained under.
#[derive(Debug, Serialize, Deserialize)]
pub struct SavedModel {
    pub format_version: u32,
    pub layer_dims: Vec<usize>,
    /// Row-major nested arrays, one matrix per layer.
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub seed: u64,
    pub standardization: Vec<Scaling>,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

impl SavedModel {
    pub fn new(mlp: &Mlp, standardization: Vec<Scaling>) -> Self {
        SavedModel {
            format_version: MODEL_FORMAT_VERSION,
            layer_dims: mlp.layer_dims.clone(),
            weights: mlp
                .weights
                .iter()
                .map(|w| w.rows().into_iter().map(|r| r.to_vec()).collect())
                .collect(),
            biases: mlp.biases.iter().map(|b| b.to_vec()).collect(),
            seed: mlp.seed,
            standardization,
        }
    }

    pub fn into_mlp(self) -> Result<(Mlp, Vec<Scaling>)> {
        let weights = self
            .weights
            .into_iter()
            .map(|rows| {
                let nrows = rows.len();
                let ncols = rows.first().map_or(0, |r| r.len());
                if rows.iter().any(|r| r.len() != ncols) {
                    return Err(Error::data("ragged weight matrix in model file"));
                }
                let flat: Vec<f64> = rows.into_iter().flatten().collect();
                Array2::from_shape_vec((nrows, ncols), flat)
                    .map_err(|e| Error::data(format!("bad weight shape: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let biases = self.biases.into_iter().map(Array1::from_vec).collect();
        let mlp = Mlp::from_parts(self.layer_dims, weights, biases, self.seed)?;
        Ok((mlp, self.standardization))
    }
}
