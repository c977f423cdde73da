use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

pub fn swish(x: f64) -> f64 {
    x * sigmoid(x)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn swish_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s + x * s * (1.0 - s)
}

/// Diagonal Gaussian negative log-likelihood, summed over dimensions.
pub fn gaussian_nll(mean: &[f64], log_std: &[f64], target: &[f64]) -> f64 {
    debug_assert!(mean.len() == log_std.len() && mean.len() == target.len());
    mean.iter()
        .zip(log_std)
        .zip(target)
        .map(|((m, ls), t)| {
            let z = (t - m) / ls.exp();
            ls + HALF_LN_2PI + 0.5 * z * z
        })
        .sum()
}

/// Network output for one input: mean and raw (unclamped) log-std.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl Prediction {
    pub fn clamped_log_std(&self) -> Vec<f64> {
        self.log_std.iter().map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect()
    }

    pub fn nll(&self, target: &[f64]) -> f64 {
        gaussian_nll(&self.mean, &self.clamped_log_std(), target)
    }
}

/// Row-major minibatch of `(input, target)` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub input_dim: usize,
    pub target_dim: usize,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
}

impl Batch {
    pub fn new(input_dim: usize, target_dim: usize) -> Self {
        Self {
            input_dim,
            target_dim,
            ..Default::default()
        }
    }

    pub fn push(&mut self, input: &[f64], target: &[f64]) {
        assert_eq!(input.len(), self.input_dim);
        assert_eq!(target.len(), self.target_dim);
        self.inputs.extend_from_slice(input);
        self.targets.extend_from_slice(target);
    }

    pub fn len(&self) -> usize {
        if self.input_dim == 0 {
            0
        } else {
            self.inputs.len() / self.input_dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.target_dim..(i + 1) * self.target_dim]
    }
}

/// `input -> swish(W1 x + b1) -> W2 h + b2 = [mean, log_std]`.
///
/// Parameters live in one flat vector laid out as `W1 (hidden x input)`,
/// `b1`, `W2 (2*target x hidden)`, `b2`, each row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input_dim: usize,
    hidden_dim: usize,
    target_dim: usize,
    params: Vec<f64>,
}

impl Mlp {
    pub fn zeros(input_dim: usize, hidden_dim: usize, target_dim: usize) -> Self {
        let n = hidden_dim * input_dim + hidden_dim + 2 * target_dim * hidden_dim + 2 * target_dim;
        Self {
            input_dim,
            hidden_dim,
            target_dim,
            params: vec![0.0; n],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(input_dim: usize, hidden_dim: usize, target_dim: usize, rng: &mut RandomStream) -> Self {
        let mut net = Self::zeros(input_dim, hidden_dim, target_dim);
        let out = 2 * target_dim;
        let l1 = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        let l2 = (6.0 / (hidden_dim + out) as f64).sqrt();
        let (w1, rest) = net.params.split_at_mut(hidden_dim * input_dim);
        w1.iter_mut().for_each(|w| *w = rng.gen_range(-l1..=l1));
        let w2 = &mut rest[hidden_dim..hidden_dim + out * hidden_dim];
        w2.iter_mut().for_each(|w| *w = rng.gen_range(-l2..=l2));
        net
    }

    pub(crate) fn from_parts(input_dim: usize, hidden_dim: usize, target_dim: usize, params: Vec<f64>) -> Result<Self> {
        let net = Self::zeros(input_dim, hidden_dim, target_dim);
        if params.len() != net.params.len() {
            return Err(Error::contract(format!(
                "parameter count {} does not match dims ({input_dim}, {hidden_dim}, {target_dim})",
                params.len()
            )));
        }
        Ok(Self { params, ..net })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden_dim * self.input_dim;
        let w2 = b1 + self.hidden_dim;
        let b2 = w2 + 2 * self.target_dim * self.hidden_dim;
        (b1, w2, b2)
    }

    fn hidden_pre(&self, input: &[f64], out: &mut [f64]) {
        let (b1, _, _) = self.offsets();
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.params[j * self.input_dim..(j + 1) * self.input_dim];
            *o = self.params[b1 + j] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    fn head(&self, hidden: &[f64], out: &mut [f64]) {
        let (_, w2, b2) = self.offsets();
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.params[w2 + k * self.hidden_dim..w2 + (k + 1) * self.hidden_dim];
            *o = self.params[b2 + k] + row.iter().zip(hidden).map(|(w, h)| w * h).sum::<f64>();
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Prediction> {
        if input.len() != self.input_dim {
            return Err(Error::contract(format!(
                "input has {} features, network expects {}",
                input.len(),
                self.input_dim
            )));
        }
        let mut pre = vec![0.0; self.hidden_dim];
        self.hidden_pre(input, &mut pre);
        let hidden: Vec<f64> = pre.iter().map(|&x| swish(x)).collect();
        let mut out = vec![0.0; 2 * self.target_dim];
        self.head(&hidden, &mut out);
        let log_std = out.split_off(self.target_dim);
        Ok(Prediction { mean: out, log_std })
    }

    /// Mean NLL over the batch.
    pub fn loss(&self, batch: &Batch) -> Result<f64> {
        self.check_batch(batch)?;
        let mut total = 0.0;
        for i in 0..batch.len() {
            total += self.forward(batch.input(i))?.nll(batch.target(i));
        }
        Ok(total / batch.len() as f64)
    }

    fn check_batch(&self, batch: &Batch) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::contract("empty batch"));
        }
        if batch.input_dim != self.input_dim || batch.target_dim != self.target_dim {
            return Err(Error::contract(format!(
                "batch dims ({}, {}) do not match network ({}, {})",
                batch.input_dim, batch.target_dim, self.input_dim, self.target_dim
            )));
        }
        Ok(())
    }

    /// Mean batch NLL and its exact gradient with respect to every parameter.
    /// Log-std units outside the clamp range receive zero gradient.
    pub fn backward(&self, batch: &Batch) -> Result<(f64, Vec<f64>)> {
        self.check_batch(batch)?;
        let (b1, w2, b2) = self.offsets();
        let (n_in, n_h, m) = (self.input_dim, self.hidden_dim, self.target_dim);
        let mut grad = vec![0.0; self.params.len()];
        let mut pre = vec![0.0; n_h];
        let mut hidden = vec![0.0; n_h];
        let mut out = vec![0.0; 2 * m];
        let mut d_out = vec![0.0; 2 * m];
        let mut d_hidden = vec![0.0; n_h];
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;

        for i in 0..batch.len() {
            let x = batch.input(i);
            let t = batch.target(i);
            self.hidden_pre(x, &mut pre);
            for (h, p) in hidden.iter_mut().zip(&pre) {
                *h = swish(*p);
            }
            self.head(&hidden, &mut out);

            for k in 0..m {
                let raw = out[m + k];
                let ls = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
                let inv_std = (-ls).exp();
                let z = (t[k] - out[k]) * inv_std;
                loss += ls + HALF_LN_2PI + 0.5 * z * z;
                d_out[k] = -z * inv_std * scale;
                d_out[m + k] = if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                    (1.0 - z * z) * scale
                } else {
                    0.0
                };
            }

            d_hidden.iter_mut().for_each(|d| *d = 0.0);
            for (k, dk) in d_out.iter().enumerate() {
                grad[b2 + k] += dk;
                let row = w2 + k * n_h;
                for j in 0..n_h {
                    grad[row + j] += dk * hidden[j];
                    d_hidden[j] += dk * self.params[row + j];
                }
            }
            for j in 0..n_h {
                let dp = d_hidden[j] * swish_grad(pre[j]);
                grad[b1 + j] += dp;
                let row = j * n_in;
                for (g, xv) in grad[row..row + n_in].iter_mut().zip(x) {
                    *g += dp * xv;
                }
            }
        }
        Ok((loss * scale, grad))
    }
}
