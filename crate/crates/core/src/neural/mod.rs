//! A small dense-network stack: forward pass with a gradient tape, exact
//! reverse-mode backward, and Adam.

mod classifier;
mod io;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use classifier::{
    bce_loss, confusion_at, fit_bce, select_threshold_youden, train_classifier, ClassifierConfig,
    ClassifierManifest, Confusion,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the pre-activation `z`.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Dense layer with a row-major `outputs × inputs` weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    /// Uniform initialization in `±1/√fan_in` for weights and bias.
    pub fn init(inputs: usize, outputs: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (inputs.max(1) as f64).sqrt();
        Layer {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.gen_range(-bound..bound)).collect(),
            bias: (0..outputs).map(|_| rng.gen_range(-bound..bound)).collect(),
            activation,
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
}

/// Values cached by [`MlpModel::forward`] for the matching backward pass.
#[derive(Debug, Clone)]
pub struct GradientTape {
    shapes: Vec<(usize, usize)>,
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl GradientTape {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Pre-activation of the last layer.
    pub fn logits(&self) -> &[f64] {
        self.pre.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Parameter gradients shaped like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: model.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.bias).flatten()
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut()).flatten()
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.values_mut().for_each(|v| *v *= s);
    }

    pub fn norm(&self) -> f64 {
        self.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|v| *v == 0.0)
    }
}

impl MlpModel {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("layer list"));
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs {
                return Err(Error::Dimension { expected: l.inputs * l.outputs, got: l.weights.len() });
            }
            if l.bias.len() != l.outputs {
                return Err(Error::Dimension { expected: l.outputs, got: l.bias.len() });
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::Precondition("non-finite parameter".into()));
            }
        }
        for w in layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::Dimension { expected: w[0].outputs, got: w[1].inputs });
            }
        }
        Ok(MlpModel { layers })
    }

    /// Builds `dims[0] → … → dims[n]` with `hidden` between layers and
    /// `output` on the last one.
    pub fn random(dims: &[usize], hidden: Activation, output: Activation, rng: &mut impl Rng) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| Layer::init(dims[i], dims[i + 1], if i + 1 == n { output } else { hidden }, rng))
            .collect();
        MlpModel { layers }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, GradientTape)> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension { expected: self.input_dim(), got: input.len() });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        for l in &self.layers {
            let z = l.affine(&x);
            let a = z.iter().map(|&v| l.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut x, a));
            pre.push(z);
        }
        let tape = GradientTape {
            shapes: self.layers.iter().map(|l| (l.inputs, l.outputs)).collect(),
            inputs,
            pre,
            output: x.clone(),
        };
        Ok((x, tape))
    }

    /// Forward pass without recording a tape.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension { expected: self.input_dim(), got: input.len() });
        }
        let mut x = input.to_vec();
        for l in &self.layers {
            x = l.affine(&x).into_iter().map(|v| l.activation.apply(v)).collect();
        }
        Ok(x)
    }

    /// First output unit; the score of a single-output classifier.
    pub fn score(&self, input: &[f64]) -> Result<f64> {
        Ok(self.predict(input)?[0])
    }

    /// Gradients of a scalar loss given `∂L/∂output`.
    pub fn backward(&self, tape: &GradientTape, output_grad: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        self.check_tape(tape, output_grad.len())?;
        let last = self.layers.len() - 1;
        let act = self.layers[last].activation;
        let delta = output_grad
            .iter()
            .zip(&tape.pre[last])
            .map(|(g, &z)| g * act.derivative(z))
            .collect();
        Ok(self.backprop(tape, delta))
    }

    /// Gradients given `∂L/∂z` for the last layer's pre-activation `z`,
    /// bypassing the output activation.
    pub fn backward_from_logits(&self, tape: &GradientTape, logit_grad: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        self.check_tape(tape, logit_grad.len())?;
        Ok(self.backprop(tape, logit_grad.to_vec()))
    }

    fn check_tape(&self, tape: &GradientTape, grad_len: usize) -> Result<()> {
        let stale = tape.shapes.len() != self.layers.len()
            || tape.shapes.iter().zip(&self.layers).any(|(&(i, o), l)| i != l.inputs || o != l.outputs);
        if stale {
            return Err(Error::Precondition("gradient tape does not belong to this model".into()));
        }
        if grad_len != self.output_dim() {
            return Err(Error::Dimension { expected: self.output_dim(), got: grad_len });
        }
        Ok(())
    }

    fn backprop(&self, tape: &GradientTape, mut delta: Vec<f64>) -> (Gradients, Vec<f64>) {
        let mut grads = Gradients::zeros_like(self);
        for (k, l) in self.layers.iter().enumerate().rev() {
            let x = &tape.inputs[k];
            for (o, &d) in delta.iter().enumerate() {
                grads.bias[k][o] = d;
                let row = &mut grads.weights[k][o * l.inputs..(o + 1) * l.inputs];
                for (g, &xi) in row.iter_mut().zip(x) {
                    *g = d * xi;
                }
            }
            let mut dx = vec![0.0; l.inputs];
            for (row, &d) in l.weights.chunks_exact(l.inputs).zip(&delta) {
                if d != 0.0 {
                    for (acc, w) in dx.iter_mut().zip(row) {
                        *acc += w * d;
                    }
                }
            }
            if k > 0 {
                let prev = self.layers[k - 1].activation;
                for (g, &z) in dx.iter_mut().zip(&tape.pre[k - 1]) {
                    *g *= prev.derivative(z);
                }
            }
            delta = dx;
        }
        (grads, delta)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        let (w, b): (Vec<_>, Vec<_>) = self.layers.iter_mut().map(|l| (&mut l.weights, &mut l.bias)).unzip();
        w.into_iter().chain(b).flat_map(|v| v.iter_mut())
    }
}

/// Adam optimizer state for one model.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Gradients,
    v: Gradients,
}

impl AdamState {
    pub fn new(model: &MlpModel, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let moments = self.m.values_mut().zip(self.v.values_mut());
        for ((p, g), (m, v)) in model.params_mut().zip(grads.values()).zip(moments) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(weights: Vec<f64>, bias: Vec<f64>, inputs: usize, act: Activation) -> MlpModel {
        let outputs = bias.len();
        MlpModel::new(vec![Layer { inputs, outputs, weights, bias, activation: act }]).unwrap()
    }

    #[test]
    fn trivial_forward_cases() {
        let id = single(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], 2, Activation::Identity);
        assert_eq!(id.predict(&[3.0, -4.0]).unwrap(), vec![3.0, -4.0]);
        let relu = single(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], 2, Activation::Relu);
        assert_eq!(relu.predict(&[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);
        let sig = single(vec![1.0], vec![0.0], 1, Activation::Sigmoid);
        assert_eq!(sig.predict(&[0.0]).unwrap(), vec![0.5]);
        assert!(matches!(sig.forward(&[0.0, 1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn linear_input_gradient_is_transpose_product() {
        let m = single(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![0.5, -0.5], 3, Activation::Identity);
        let (_, tape) = m.forward(&[1.0, 1.0, 1.0]).unwrap();
        let (_, dx) = m.backward(&tape, &[1.0, -2.0]).unwrap();
        assert_eq!(dx, vec![1.0 - 8.0, 2.0 - 10.0, 3.0 - 12.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = MlpModel::random(&[4, 5, 3], Activation::Relu, Activation::Sigmoid, &mut rng);
        let (_, tape) = m.forward(&[0.1, 0.2, -0.3, 0.4]).unwrap();
        let (g, dx) = m.backward(&tape, &[0.0; 3]).unwrap();
        assert!(g.is_zero());
        assert!(dx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn stale_tape_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = MlpModel::random(&[3, 4, 1], Activation::Relu, Activation::Sigmoid, &mut rng);
        let b = MlpModel::random(&[3, 5, 1], Activation::Relu, Activation::Sigmoid, &mut rng);
        let (_, tape) = a.forward(&[0.0; 3]).unwrap();
        assert!(matches!(b.backward(&tape, &[1.0]), Err(Error::Precondition(_))));
    }

    #[test]
    fn adam_first_step_moves_each_parameter_by_lr() {
        let mut m = single(vec![1.0, -1.0], vec![0.0], 2, Activation::Identity);
        let mut adam = AdamState::new(&m, 0.01);
        let g = Gradients { weights: vec![vec![3.0, -0.5]], bias: vec![vec![0.0]] };
        adam.step(&mut m, &g);
        // bias-corrected first step is lr · sign(g)
        assert!((m.layers()[0].weights[0] - 0.99).abs() < 1e-9);
        assert!((m.layers()[0].weights[1] + 0.99).abs() < 1e-9);
        assert_eq!(m.layers()[0].bias[0], 0.0);
    }

    #[test]
    fn softplus_and_sigmoid_are_stable() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
