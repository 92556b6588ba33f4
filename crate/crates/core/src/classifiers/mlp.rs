//! One-hidden-layer perceptron with logistic units, trained by scaled conjugate
//! gradient on regularized cross-entropy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_len, TrainSet};
use crate::{seed, Error, Result};

pub const MLP_DEFAULT_LAMBDA: f64 = 0.01;
const MAX_ITERATIONS: usize = 500;
const GRAD_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub hidden_count: usize,
    pub input_count: usize,
    /// Hidden-layer weights, row-major `hidden_count x input_count`.
    pub hidden_weights: Vec<f64>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    pub lambda: f64,
    /// Objective value after every accepted step; entry 0 is the initial loss.
    #[serde(default)]
    pub training_loss: Vec<f64>,
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl MlpModel {
    pub fn zeros(input_count: usize, hidden_count: usize, lambda: f64) -> Self {
        Self {
            hidden_count,
            input_count,
            hidden_weights: vec![0.0; hidden_count * input_count],
            hidden_biases: vec![0.0; hidden_count],
            output_weights: vec![0.0; hidden_count],
            output_bias: 0.0,
            lambda,
            training_loss: Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.hidden_count * (self.input_count + 2) + 1
    }

    /// Flat parameter vector: hidden weights, hidden biases, output weights, output bias.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend_from_slice(&self.hidden_weights);
        p.extend_from_slice(&self.hidden_biases);
        p.extend_from_slice(&self.output_weights);
        p.push(self.output_bias);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let (h, d) = (self.hidden_count, self.input_count);
        self.hidden_weights.copy_from_slice(&p[..h * d]);
        self.hidden_biases.copy_from_slice(&p[h * d..h * d + h]);
        self.output_weights.copy_from_slice(&p[h * d + h..h * d + 2 * h]);
        self.output_bias = p[h * d + 2 * h];
    }

    /// Output logit and hidden activations.
    fn forward(&self, x: &[f64], hidden: &mut [f64]) -> f64 {
        let d = self.input_count;
        let mut z = self.output_bias;
        for (j, act) in hidden.iter_mut().enumerate() {
            let w = &self.hidden_weights[j * d..(j + 1) * d];
            let a = self.hidden_biases[j] + w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
            *act = logistic(a);
            z += self.output_weights[j] * *act;
        }
        z
    }

    /// Network output, kept inside the open interval (0, 1).
    pub fn output(&self, x: &[f64]) -> f64 {
        let mut hidden = vec![0.0; self.hidden_count];
        logistic(self.forward(x, &mut hidden)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }
}

/// Summed cross-entropy plus `lambda / 2` times the squared weights (biases excluded).
pub fn mlp_loss(model: &MlpModel, train: &TrainSet) -> f64 {
    let mut hidden = vec![0.0; model.hidden_count];
    let mut loss = 0.0;
    for (i, &l) in train.labels.iter().enumerate() {
        let row = train.sample(i);
        let z = model.forward(row.as_slice().expect("standard layout"), &mut hidden);
        loss += softplus(z) - f64::from(l) * z;
    }
    let sq: f64 = model.hidden_weights.iter().chain(&model.output_weights).map(|w| w * w).sum();
    loss + 0.5 * model.lambda * sq
}

/// Gradient of [`mlp_loss`] in the layout of [`MlpModel::params`].
pub fn mlp_gradient(model: &MlpModel, train: &TrainSet) -> Vec<f64> {
    let (h, d) = (model.hidden_count, model.input_count);
    let mut g = vec![0.0; model.param_count()];
    let mut hidden = vec![0.0; h];
    for (i, &l) in train.labels.iter().enumerate() {
        let row = train.sample(i);
        let x = row.as_slice().expect("standard layout");
        let z = model.forward(x, &mut hidden);
        let delta = logistic(z) - f64::from(l);
        for j in 0..h {
            g[h * d + h + j] += delta * hidden[j];
            let dh = delta * model.output_weights[j] * hidden[j] * (1.0 - hidden[j]);
            g[h * d + j] += dh;
            for (gw, xv) in g[j * d..(j + 1) * d].iter_mut().zip(x) {
                *gw += dh * xv;
            }
        }
        g[h * d + 2 * h] += delta;
    }
    for (gw, w) in g[..h * d].iter_mut().zip(&model.hidden_weights) {
        *gw += model.lambda * w;
    }
    for (gw, w) in g[h * d + h..h * d + 2 * h].iter_mut().zip(&model.output_weights) {
        *gw += model.lambda * w;
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains from seeded `uniform(-0.5, 0.5) / sqrt(fan_in)` weights.
pub fn mlp_train(train: &TrainSet, hidden_count: usize, lambda: f64, seed: u64) -> Result<MlpModel> {
    if hidden_count == 0 {
        return Err(Error::InvalidArgument("hidden_count must be at least 1".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0 (got {lambda})")));
    }
    let d = train.n_features();
    let mut model = MlpModel::zeros(d, hidden_count, lambda);
    let mut rng = seed::rng(seed);
    let hidden_scale = 1.0 / (d.max(1) as f64).sqrt();
    let output_scale = 1.0 / (hidden_count as f64).sqrt();
    let mut init = |scale: f64| rng.random_range(-0.5..0.5) * scale;
    model.hidden_weights.iter_mut().for_each(|w| *w = init(hidden_scale));
    model.hidden_biases.iter_mut().for_each(|w| *w = init(hidden_scale));
    model.output_weights.iter_mut().for_each(|w| *w = init(output_scale));
    model.output_bias = init(output_scale);

    scg(&mut model, train)?;
    Ok(model)
}

/// Scaled conjugate gradient in the Netlab formulation of Møller's algorithm.
fn scg(model: &mut MlpModel, train: &TrainSet) -> Result<()> {
    const SIGMA0: f64 = 1e-4;
    const BETA_MIN: f64 = 1e-15;
    const BETA_MAX: f64 = 1e100;

    let n_params = model.param_count();
    let mut x = model.params();
    let mut probe = model.clone();
    let mut eval = |p: &[f64]| -> (f64, Vec<f64>) {
        probe.set_params(p);
        (mlp_loss(&probe, train), mlp_gradient(&probe, train))
    };

    let (mut f_old, mut grad_new) = eval(&x);
    if !f_old.is_finite() {
        return Err(Error::NonFinite("initial MLP loss".into()));
    }
    let mut trace = vec![f_old];
    let mut grad_old;
    let mut dir: Vec<f64> = grad_new.iter().map(|g| -g).collect();
    let mut success = true;
    let mut n_success = 0usize;
    let mut beta = 1.0;
    let (mut mu, mut kappa, mut theta) = (0.0, 0.0, 0.0);

    for _ in 0..MAX_ITERATIONS {
        if dot(&grad_new, &grad_new).sqrt() < GRAD_TOLERANCE {
            break;
        }
        if success {
            mu = dot(&dir, &grad_new);
            if mu >= 0.0 {
                dir = grad_new.iter().map(|g| -g).collect();
                mu = dot(&dir, &grad_new);
            }
            kappa = dot(&dir, &dir);
            if kappa < f64::EPSILON {
                break;
            }
            let sigma = SIGMA0 / kappa.sqrt();
            let x_plus: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + sigma * b).collect();
            let (_, g_plus) = eval(&x_plus);
            theta = dir
                .iter()
                .zip(g_plus.iter().zip(&grad_new))
                .map(|(d, (gp, g))| d * (gp - g))
                .sum::<f64>()
                / sigma;
        }
        let mut delta = theta + beta * kappa;
        if delta <= 0.0 {
            delta = beta * kappa;
            beta -= theta / kappa;
        }
        let alpha = -mu / delta;
        let x_new: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
        let (f_new, g_at_new) = eval(&x_new);
        if !f_new.is_finite() {
            return Err(Error::NonFinite("MLP loss during training".into()));
        }
        let comparison = 2.0 * (f_new - f_old) / (alpha * mu);
        if comparison >= 0.0 {
            success = true;
            n_success += 1;
            x = x_new;
            f_old = f_new;
            trace.push(f_new);
            grad_old = std::mem::replace(&mut grad_new, g_at_new);
        } else {
            success = false;
            grad_old = grad_new.clone();
        }
        if comparison < 0.25 {
            beta = (4.0 * beta).min(BETA_MAX);
        }
        if comparison > 0.75 {
            beta = (0.5 * beta).max(BETA_MIN);
        }
        if n_success == n_params {
            dir = grad_new.iter().map(|g| -g).collect();
            n_success = 0;
        } else if success {
            let gamma = grad_old
                .iter()
                .zip(&grad_new)
                .map(|(o, n)| (o - n) * n)
                .sum::<f64>()
                / mu;
            dir = dir
                .iter()
                .zip(&grad_new)
                .map(|(d, g)| gamma * d - g)
                .collect();
        }
    }
    model.set_params(&x);
    model.training_loss = trace;
    Ok(())
}

/// Class 1 when the output exceeds 0.5, with the output as probability.
pub fn mlp_predict(model: &MlpModel, query: &[f64]) -> Result<(u8, f64)> {
    check_len(query.len(), model.input_count)?;
    let p = model.output(query);
    Ok((u8::from(p > 0.5), p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_model_outputs_half() {
        let m = MlpModel::zeros(3, 4, 0.0);
        assert_eq!(mlp_predict(&m, &[1.0, -2.0, 5.0]).unwrap(), (0, 0.5));
        assert!(mlp_predict(&m, &[1.0]).is_err());
    }

    #[test]
    fn params_roundtrip() {
        let t = TrainSet::new(array![[0.0, 1.0], [1.0, 0.0]], vec![0, 1]).unwrap();
        let m = mlp_train(&t, 3, 0.01, 1).unwrap();
        let mut z = MlpModel::zeros(2, 3, 0.01);
        z.set_params(&m.params());
        assert_eq!(z.params(), m.params());
        assert_eq!(m.param_count(), 3 * 4 + 1);
    }

    #[test]
    fn loss_trace_non_increasing() {
        let t = TrainSet::new(
            array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [0.2, 0.9]],
            vec![0, 1, 1, 0, 1],
        )
        .unwrap();
        let m = mlp_train(&t, 3, 0.01, 5).unwrap();
        assert!(m.training_loss.len() > 1);
        for w in m.training_loss.windows(2) {
            assert!(w[1] <= w[0], "{w:?}");
        }
    }

    #[test]
    fn argument_errors() {
        let t = TrainSet::new(array![[0.0], [1.0]], vec![0, 1]).unwrap();
        assert!(mlp_train(&t, 0, 0.0, 1).is_err());
        assert!(mlp_train(&t, 1, -1.0, 1).is_err());
    }

    #[test]
    fn extreme_inputs_keep_probability_open() {
        let t = TrainSet::new(array![[0.0], [1.0]], vec![0, 1]).unwrap();
        let m = mlp_train(&t, 2, 0.01, 3).unwrap();
        for q in [-1e3, 0.0, 1e3] {
            let (_, p) = mlp_predict(&m, &[q]).unwrap();
            assert!(p > 0.0 && p < 1.0, "{p}");
        }
    }
}
