//! Small fully-connected network trained by full-batch gradient descent.
//!
//! Architecture is fixed by the task: 4 inputs, tanh hidden layers,
//! one identity output. Weights start uniform in +-1/sqrt(fan_in) from
//! the seeded generator. The learning rate halves whenever a step would
//! increase the loss (the step is retried, up to 20 halvings total), so
//! the training loss is non-increasing until the backoff budget runs
//! out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::TrainingSet;
use crate::rng::Rng;

use super::standardize::{fit_standardizer, Standardizer};

/// Layer-wise weights (row-major `[out][in]`) and biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpModel {
    /// Sizes including input (4) and output (1).
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub rng_seed: u64,
}

impl MlpModel {
    /// Validate that the weight matrices chain correctly.
    pub fn check_shape(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layer_sizes[0] != 4 {
            return Err(Error::Validation(format!(
                "layer sizes must start at 4 inputs, got {:?}",
                self.layer_sizes
            )));
        }
        if *self.layer_sizes.last().unwrap() != 1 {
            return Err(Error::Validation("output layer must have size 1".into()));
        }
        let layers = self.layer_sizes.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::Validation(format!(
                "expected {layers} weight/bias sets, got {}/{}",
                self.weights.len(),
                self.biases.len()
            )));
        }
        for l in 0..layers {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            if self.weights[l].len() != fan_in * fan_out || self.biases[l].len() != fan_out {
                return Err(Error::Validation(format!(
                    "layer {l} expects {fan_out}x{fan_in} weights and {fan_out} biases, got {}/{}",
                    self.weights[l].len(),
                    self.biases[l].len()
                )));
            }
            if self.weights[l].iter().chain(self.biases[l].iter()).any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("layer {l} has non-finite parameters")));
            }
        }
        Ok(())
    }

    fn init(hidden: &[usize], seed: u64) -> Self {
        let mut layer_sizes = vec![4usize];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(1);
        let mut rng = Rng::new(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_sizes.len() - 1 {
            let (fan_in, fan_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.range_f64(-bound, bound))
                    .collect(),
            );
            biases.push((0..fan_out).map(|_| rng.range_f64(-bound, bound)).collect());
        }
        MlpModel {
            layer_sizes,
            weights,
            biases,
            rng_seed: seed,
        }
    }

    /// Forward pass on a standardized input: tanh on hidden layers,
    /// identity output.
    pub fn forward(&self, x: &[f64; 4]) -> f64 {
        let mut activation: Vec<f64> = x.to_vec();
        let layers = self.layer_sizes.len() - 1;
        for l in 0..layers {
            let fan_in = self.layer_sizes[l];
            let fan_out = self.layer_sizes[l + 1];
            let mut next = vec![0.0; fan_out];
            for o in 0..fan_out {
                let mut z = self.biases[l][o];
                let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                for (w, a) in row.iter().zip(activation.iter()) {
                    z += w * a;
                }
                next[o] = if l + 1 == layers { z } else { z.tanh() };
            }
            activation = next;
        }
        activation[0]
    }

    /// Mean squared error over standardized inputs.
    pub fn loss(&self, xs: &[[f64; 4]], ys: &[f64]) -> f64 {
        let sq: f64 = xs
            .iter()
            .zip(ys.iter())
            .map(|(x, y)| {
                let d = self.forward(x) - y;
                d * d
            })
            .sum();
        sq / xs.len() as f64
    }

    /// Analytic gradients of the MSE by backpropagation, same shapes as
    /// `weights`/`biases`. Public so gradient-checking tests can compare
    /// against finite differences.
    pub fn gradients(&self, xs: &[[f64; 4]], ys: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let layers = self.layer_sizes.len() - 1;
        let mut grad_w: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut grad_b: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let n = xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys.iter()) {
            // Forward, keeping activations per layer.
            let mut activations: Vec<Vec<f64>> = vec![x.to_vec()];
            for l in 0..layers {
                let fan_in = self.layer_sizes[l];
                let fan_out = self.layer_sizes[l + 1];
                let prev = &activations[l];
                let mut next = vec![0.0; fan_out];
                for o in 0..fan_out {
                    let mut z = self.biases[l][o];
                    let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                    for (w, a) in row.iter().zip(prev.iter()) {
                        z += w * a;
                    }
                    next[o] = if l + 1 == layers { z } else { z.tanh() };
                }
                activations.push(next);
            }
            // d(MSE)/d(output) = 2 (pred - y) / N; identity output layer.
            let mut delta = vec![2.0 * (activations[layers][0] - y) / n];
            for l in (0..layers).rev() {
                let fan_in = self.layer_sizes[l];
                let fan_out = self.layer_sizes[l + 1];
                let prev = &activations[l];
                for o in 0..fan_out {
                    grad_b[l][o] += delta[o];
                    for i in 0..fan_in {
                        grad_w[l][o * fan_in + i] += delta[o] * prev[i];
                    }
                }
                if l > 0 {
                    // Propagate through tanh of the previous layer.
                    let mut next_delta = vec![0.0; fan_in];
                    for (i, nd) in next_delta.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (o, d) in delta.iter().enumerate() {
                            acc += d * self.weights[l][o * fan_in + i];
                        }
                        *nd = acc * (1.0 - prev[i] * prev[i]);
                    }
                    delta = next_delta;
                }
            }
        }
        (grad_w, grad_b)
    }

    fn step(&mut self, grad_w: &[Vec<f64>], grad_b: &[Vec<f64>], rate: f64) {
        for l in 0..self.weights.len() {
            for (w, g) in self.weights[l].iter_mut().zip(grad_w[l].iter()) {
                *w -= rate * g;
            }
            for (b, g) in self.biases[l].iter_mut().zip(grad_b[l].iter()) {
                *b -= rate * g;
            }
        }
    }
}

const MAX_HALVINGS: u32 = 20;
const LOSS_TOLERANCE: f64 = 1e-12;

/// Train by full-batch gradient descent on the MSE. Features are
/// standardized internally; the fitted standardizer is returned for
/// bundling. `epochs == 0` returns the seeded initialization unchanged.
pub fn fit_mlp(
    train: &TrainingSet,
    hidden: &[usize],
    learning_rate: f64,
    epochs: usize,
    seed: u64,
) -> Result<(MlpModel, Standardizer)> {
    if !(learning_rate.is_finite() && learning_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be > 0, got {learning_rate}"
        )));
    }
    let rows = train.feature_rows();
    let ys = train.targets()?;
    if rows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "MLP needs at least 2 samples, got {}",
            rows.len()
        )));
    }
    let standardizer = fit_standardizer(&rows)?;
    let xs = standardizer.apply_all(&rows);

    let mut model = MlpModel::init(hidden, seed);
    let mut rate = learning_rate;
    let mut halvings = 0u32;
    let mut loss = model.loss(&xs, &ys);
    for _ in 0..epochs {
        let (grad_w, grad_b) = model.gradients(&xs, &ys);
        loop {
            let mut candidate = model.clone();
            candidate.step(&grad_w, &grad_b, rate);
            let new_loss = candidate.loss(&xs, &ys);
            if new_loss <= loss + LOSS_TOLERANCE || halvings >= MAX_HALVINGS {
                model = candidate;
                loss = new_loss;
                break;
            }
            rate /= 2.0;
            halvings += 1;
        }
    }
    Ok((model, standardizer))
}
