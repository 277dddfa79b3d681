use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Fully connected perceptron with tanh hidden layers and flat parameter
/// storage (`W` row-major, then `b`, per layer).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    output: Activation,
    params: Vec<f64>,
}

/// Per-layer outputs of a forward pass, input first.
pub type Activations = Vec<Vec<f64>>;

impl Mlp {
    pub fn new(sizes: &[usize], output: Activation, rng: &mut Rng) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let mut params = Vec::with_capacity(Self::param_count(sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self {
            sizes: sizes.to_vec(),
            output,
            params,
        }
    }

    fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Zeroes the last layer's weights and biases.
    pub fn zero_output_layer(&mut self) {
        let n = self.sizes.len();
        let last = self.sizes[n - 2] * self.sizes[n - 1] + self.sizes[n - 1];
        let len = self.params.len();
        self.params[len - last..].fill(0.0);
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 2 == self.sizes.len() {
            self.output
        } else {
            Activation::Tanh
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).pop().unwrap()
    }

    pub fn forward_cached(&self, x: &[f64]) -> Activations {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut acts: Activations = Vec::with_capacity(self.sizes.len());
        acts.push(x.to_vec());
        let mut offset = 0;
        for layer in 0..self.sizes.len() - 1 {
            let (n_in, n_out) = (self.sizes[layer], self.sizes[layer + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let act = self.activation(layer);
            let input = acts.last().unwrap();
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    let z = b[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    act.apply(z)
                })
                .collect();
            acts.push(out);
            offset += n_in * n_out + n_out;
        }
        acts
    }

    /// Backpropagates `grad_out` (dLoss/dOutput) through a cached forward
    /// pass, accumulating dLoss/dParams into `param_grad` and returning
    /// dLoss/dInput.
    pub fn backward(
        &self,
        acts: &Activations,
        grad_out: &[f64],
        param_grad: &mut [f64],
    ) -> Vec<f64> {
        debug_assert_eq!(param_grad.len(), self.params.len());
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for w in self.sizes.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        let mut delta: Vec<f64> = grad_out.to_vec();
        for layer in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[layer], self.sizes[layer + 1]);
            let act = self.activation(layer);
            let out = &acts[layer + 1];
            for (d, y) in delta.iter_mut().zip(out) {
                *d *= act.derivative_from_output(*y);
            }
            let input = &acts[layer];
            let base = offsets[layer];
            let w = &self.params[base..base + n_in * n_out];
            let (gw, gb) = param_grad[base..base + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            for o in 0..n_out {
                let d = delta[o];
                gb[o] += d;
                for (g, x) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            let mut next = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                for (n, wv) in next.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *n += d * wv;
                }
            }
            delta = next;
        }
        delta
    }

    /// `self ← τ·source + (1 − τ)·self`.
    pub fn soft_update_from(&mut self, source: &Mlp, tau: f64) {
        for (t, s) in self.params.iter_mut().zip(&source.params) {
            *t = tau * s + (1.0 - tau) * *t;
        }
    }
}

/// Plain SGD with classical momentum.
#[derive(Clone, Debug)]
pub struct Momentum {
    velocity: Vec<f64>,
    lr: f64,
    momentum: f64,
}

impl Momentum {
    pub fn new(len: usize, lr: f64, momentum: f64) -> Self {
        Self {
            velocity: vec![0.0; len],
            lr,
            momentum,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grad) {
            *v = self.momentum * *v - self.lr * g;
            *p += *v;
        }
    }
}
