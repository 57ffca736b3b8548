//! Dense feed-forward networks with soft-LIF hidden units.
//!
//! A [`DenseNet`] is a chain of affine layers. Every layer except the last is
//! followed by the soft-LIF rate curve ([`crate::neuron::rate_soft`]); the
//! affine output is treated as the unit's input current, so a layer bias acts
//! as a constant injected current. The final layer is linear and produces
//! logits or a value estimate.

pub mod checkpoint;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuron::{rate_soft, rate_soft_with_grad, NeuronParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    SoftRellif,
    Identity,
}

/// One affine map `y = W x + b` with `W` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    pub fn from_parts(inputs: usize, outputs: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if weights.len() != inputs * outputs {
            return Err(Error::DimensionMismatch {
                expected: inputs * outputs,
                got: weights.len(),
            });
        }
        if biases.len() != outputs {
            return Err(Error::DimensionMismatch {
                expected: outputs,
                got: biases.len(),
            });
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            biases,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }
    pub fn outputs(&self) -> usize {
        self.outputs
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn biases(&self) -> &[f64] {
        &self.biases
    }
    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }
    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.inputs + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.weights[row * self.inputs..(row + 1) * self.inputs]
    }

    /// `out = W x + b`
    pub fn affine_into(&self, x: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), self.inputs);
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.biases)
                .map(|(row, b)| row.iter().zip(x).fold(*b, |acc, (w, xi)| acc + w * xi)),
        );
    }

    pub fn affine(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.outputs);
        self.affine_into(x, &mut out);
        out
    }
}

/// Feed-forward network: soft-LIF hidden layers, linear output layer.
#[derive(Debug, Clone)]
pub struct DenseNet {
    dims: Vec<usize>,
    layers: Vec<Dense>,
    hidden_activation: Activation,
    output_activation: Activation,
    params: NeuronParams,
    // bumped on every mutable access to the parameters; tapes record it
    generation: u64,
}

impl PartialEq for DenseNet {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims
            && self.layers == other.layers
            && self.hidden_activation == other.hidden_activation
            && self.output_activation == other.output_activation
            && self.params == other.params
    }
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::InvalidDims {
            dims: dims.to_vec(),
            reason: "need at least an input and an output width".into(),
        });
    }
    if dims.contains(&0) {
        return Err(Error::InvalidDims {
            dims: dims.to_vec(),
            reason: "every layer width must be positive".into(),
        });
    }
    Ok(())
}

impl DenseNet {
    /// Glorot-uniform weights (bound `sqrt(6 / (fan_in + fan_out))`), zero biases.
    pub fn init(dims: &[usize], seed: u64, params: NeuronParams) -> Result<Self> {
        validate_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
                Dense {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights,
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            layers,
            hidden_activation: Activation::SoftRellif,
            output_activation: Activation::Identity,
            params,
            generation: 0,
        })
    }

    /// Set every hidden-layer bias to `bias`.
    pub fn with_hidden_bias(mut self, bias: f64) -> Self {
        let n = self.layers.len();
        for layer in &mut self.layers[..n - 1] {
            layer.biases.fill(bias);
        }
        self
    }

    /// Multiply the output layer's weights by `factor`.
    pub fn with_output_scale(mut self, factor: f64) -> Self {
        if let Some(last) = self.layers.last_mut() {
            last.weights.iter_mut().for_each(|w| *w *= factor);
        }
        self
    }

    /// Assemble a network from explicit layers; shapes must chain.
    pub fn from_layers(layers: Vec<Dense>, params: NeuronParams) -> Result<Self> {
        Self::from_parts(layers, Activation::SoftRellif, Activation::Identity, params)
    }

    pub fn from_parts(
        layers: Vec<Dense>,
        hidden_activation: Activation,
        output_activation: Activation,
        params: NeuronParams,
    ) -> Result<Self> {
        let first = layers.first().ok_or_else(|| Error::InvalidDims {
            dims: vec![],
            reason: "no layers".into(),
        })?;
        let mut dims = vec![first.inputs];
        for layer in &layers {
            if layer.inputs != *dims.last().unwrap() {
                return Err(Error::InvalidDims {
                    dims: layers.iter().map(|l| l.inputs).collect(),
                    reason: format!(
                        "layer expecting {} inputs follows width {}",
                        layer.inputs,
                        dims.last().unwrap()
                    ),
                });
            }
            dims.push(layer.outputs);
        }
        validate_dims(&dims)?;
        if output_activation != Activation::Identity {
            return Err(Error::IncompatibleNetwork("the output layer must be linear".into()));
        }
        if layers
            .iter()
            .any(|l| l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()))
        {
            return Err(Error::IncompatibleNetwork("non-finite parameter".into()));
        }
        Ok(Self {
            dims,
            layers,
            hidden_activation,
            output_activation,
            params,
            generation: 0,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }
    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }
    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }
    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }
    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }
    pub fn neuron_params(&self) -> &NeuronParams {
        &self.params
    }
    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Mutable access to the parameters. Invalidates outstanding tapes.
    pub fn layers_mut(&mut self) -> &mut [Dense] {
        self.generation += 1;
        &mut self.layers
    }

    fn check_input(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.dims[0] {
            return Err(Error::DimensionMismatch {
                expected: self.dims[0],
                got: obs.len(),
            });
        }
        Ok(())
    }

    fn activate(&self, current: f64) -> f64 {
        match self.hidden_activation {
            Activation::SoftRellif => rate_soft(&self.params, current),
            Activation::Identity => current,
        }
    }

    fn activate_with_grad(&self, current: f64) -> (f64, f64) {
        match self.hidden_activation {
            Activation::SoftRellif => rate_soft_with_grad(&self.params, current),
            Activation::Identity => (current, 1.0),
        }
    }

    /// Forward pass without recording a tape.
    pub fn predict(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.check_input(obs)?;
        let mut x = obs.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.affine_into(&x, &mut next);
            if k < last {
                for v in next.iter_mut() {
                    *v = self.activate(*v);
                }
            }
            std::mem::swap(&mut x, &mut next);
        }
        Ok(x)
    }

    /// Hidden-layer activations (rates) for one observation, one vector per hidden layer.
    pub fn hidden_activations(&self, obs: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(obs)?;
        let mut x = obs.to_vec();
        let mut out = Vec::with_capacity(self.layers.len() - 1);
        for layer in &self.layers[..self.layers.len() - 1] {
            x = layer.affine(&x);
            for v in x.iter_mut() {
                *v = self.activate(*v);
            }
            out.push(x.clone());
        }
        Ok(out)
    }

    /// Forward pass recording what [`DenseNet::backward`] needs.
    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<f64>, Tape)> {
        self.check_input(obs)?;
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut slopes = Vec::with_capacity(n - 1);
        let mut x = obs.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(&x);
            inputs.push(x);
            if k + 1 < n {
                let mut slope = Vec::with_capacity(z.len());
                for v in z.iter_mut() {
                    let (a, g) = self.activate_with_grad(*v);
                    *v = a;
                    slope.push(g);
                }
                slopes.push(slope);
            }
            x = z;
        }
        let tape = Tape {
            generation: self.generation,
            dims: self.dims.clone(),
            inputs,
            slopes,
        };
        Ok((x, tape))
    }

    fn check_tape(&self, tape: &Tape) -> Result<()> {
        if tape.dims != self.dims {
            return Err(Error::StaleTape(format!(
                "tape dims {:?} vs network dims {:?}",
                tape.dims, self.dims
            )));
        }
        if tape.generation != self.generation {
            return Err(Error::StaleTape("parameters changed after the forward pass".into()));
        }
        Ok(())
    }

    /// Gradients of a scalar loss whose gradient w.r.t. the output is `output_grad`.
    pub fn backward(&self, tape: &Tape, output_grad: &[f64]) -> Result<ParamGrads> {
        let mut grads = ParamGrads::zeros_like(self);
        self.backward_accumulate(tape, output_grad, &mut grads)?;
        Ok(grads)
    }

    /// Like [`DenseNet::backward`] but adds into an existing accumulator.
    pub fn backward_accumulate(&self, tape: &Tape, output_grad: &[f64], acc: &mut ParamGrads) -> Result<()> {
        self.check_tape(tape)?;
        if output_grad.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                got: output_grad.len(),
            });
        }
        let mut delta = output_grad.to_vec();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let x = &tape.inputs[k];
            let g = &mut acc.layers[k];
            for (r, &d) in delta.iter().enumerate() {
                g.biases[r] += d;
                if d != 0.0 {
                    let row = &mut g.weights[r * layer.inputs..(r + 1) * layer.inputs];
                    for (gw, xi) in row.iter_mut().zip(x) {
                        *gw += d * xi;
                    }
                }
            }
            if k > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for (r, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        for (p, w) in prev.iter_mut().zip(layer.row(r)) {
                            *p += d * w;
                        }
                    }
                }
                for (p, s) in prev.iter_mut().zip(&tape.slopes[k - 1]) {
                    *p *= s;
                }
                delta = prev;
            }
        }
        Ok(())
    }

    /// `params -= step` for every parameter, layer by layer.
    pub fn apply_step(&mut self, step: &ParamGrads) {
        for (layer, s) in self.layers_mut().iter_mut().zip(&step.layers) {
            for (w, d) in layer.weights.iter_mut().zip(&s.weights) {
                *w -= d;
            }
            for (b, d) in layer.biases.iter_mut().zip(&s.biases) {
                *b -= d;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }
}

/// Values cached by [`DenseNet::forward`]: each layer's input and the
/// activation slope at every hidden unit.
#[derive(Debug, Clone)]
pub struct Tape {
    generation: u64,
    dims: Vec<usize>,
    inputs: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Per-parameter gradients with the same layout as a [`DenseNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub layers: Vec<LayerGrads>,
}

impl ParamGrads {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases))
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|v| *v *= factor);
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|&v| v == 0.0)
    }

    pub fn all_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    /// Flattened view in layer order (weights then biases per layer).
    pub fn flatten(&self) -> Vec<f64> {
        self.values().copied().collect()
    }

    /// Inverse of [`ParamGrads::flatten`] for a network of the same shape.
    pub fn from_flat(net: &DenseNet, flat: &[f64]) -> Self {
        let mut g = Self::zeros_like(net);
        for (dst, src) in g.values_mut().zip(flat) {
            *dst = *src;
        }
        g
    }
}
