//! Feedforward binary classifier: one ReLU hidden layer, sigmoid output,
//! inverted dropout, binary cross-entropy and RMSprop.
//!
//! Parameters are stored in one flat vector, laid out as `W1` (row-major,
//! `hidden x input`), `b1`, `W2`, `b2`. Gradients and optimizer state share
//! that layout.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hash::Fnv64;

/// Probabilities are clamped to `[EPS, 1 - EPS]`.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("input has {found} features, the network expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("loss became non-finite in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("empty training set")]
    EmptyData,
    #[error("label {0} is not 0 or 1")]
    BadLabel(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParameters(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            epochs: 10,
            batch_size: 100,
            dropout: 0.2,
            learning_rate: 0.001,
            rho: 0.9,
            epsilon: 1e-8,
            seed: 0,
            shuffle: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.batch_size == 0 {
            return Err(NetError::InvalidConfig("batch size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NetError::InvalidConfig("dropout must be in [0, 1)"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(NetError::InvalidConfig("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(NetError::InvalidConfig("rho must be in [0, 1)"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(NetError::InvalidConfig("epsilon must be positive"));
        }
        Ok(())
    }
}

/// Dropout state for one forward pass.
#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    Infer,
    /// Per-unit multipliers: 0 for dropped units, `1 / keep` otherwise.
    Train { input_mask: &'a [f64], hidden_mask: &'a [f64] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input_dim: usize,
    hidden_dim: usize,
    theta: Vec<f64>,
}

struct Activations {
    x: Vec<f64>,
    pre: Vec<f64>,
    h: Vec<f64>,
    p_raw: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

pub fn bce(p: f64, label: f64) -> f64 {
    let p = clamp_prob(p);
    -(label * libm::log(p) + (1.0 - label) * libm::log(1.0 - p))
}

impl Mlp {
    pub fn param_count(input_dim: usize, hidden_dim: usize) -> usize {
        hidden_dim * input_dim + 2 * hidden_dim + 1
    }

    /// Xavier-uniform weights, zero biases.
    pub fn init(input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        assert!(input_dim >= 1 && hidden_dim >= 1, "layer sizes must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Mlp {
            input_dim,
            hidden_dim,
            theta: vec![0.0; Self::param_count(input_dim, hidden_dim)],
        };
        let a1 = libm::sqrt(6.0 / (input_dim + hidden_dim) as f64);
        for w in net.w1_mut() {
            *w = rng.gen_range(-a1..=a1);
        }
        let a2 = libm::sqrt(6.0 / (hidden_dim + 1) as f64);
        let (w2_start, w2_end) = net.w2_range();
        for w in &mut net.theta[w2_start..w2_end] {
            *w = rng.gen_range(-a2..=a2);
        }
        net
    }

    pub fn from_parameters(input_dim: usize, hidden_dim: usize, theta: Vec<f64>) -> Result<Self, NetError> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(NetError::InvalidParameters("layer sizes must be positive"));
        }
        if theta.len() != Self::param_count(input_dim, hidden_dim) {
            return Err(NetError::InvalidParameters("parameter count does not match the layer sizes"));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(NetError::InvalidParameters("non-finite parameter"));
        }
        Ok(Mlp {
            input_dim,
            hidden_dim,
            theta,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn parameters(&self) -> &[f64] {
        &self.theta
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn w2_range(&self) -> (usize, usize) {
        let start = self.hidden_dim * self.input_dim + self.hidden_dim;
        (start, start + self.hidden_dim)
    }

    pub fn w1(&self) -> &[f64] {
        &self.theta[..self.hidden_dim * self.input_dim]
    }

    fn w1_mut(&mut self) -> &mut [f64] {
        let n = self.hidden_dim * self.input_dim;
        &mut self.theta[..n]
    }

    pub fn b1(&self) -> &[f64] {
        let start = self.hidden_dim * self.input_dim;
        &self.theta[start..start + self.hidden_dim]
    }

    pub fn w2(&self) -> &[f64] {
        let (s, e) = self.w2_range();
        &self.theta[s..e]
    }

    pub fn b2(&self) -> f64 {
        self.theta[self.theta.len() - 1]
    }

    pub fn set_b2(&mut self, v: f64) {
        let n = self.theta.len();
        self.theta[n - 1] = v;
    }

    pub fn checksum(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_u64(self.input_dim as u64).write_u64(self.hidden_dim as u64);
        for &v in &self.theta {
            h.write_f64(v);
        }
        h.finish()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), NetError> {
        if x.len() != self.input_dim {
            return Err(NetError::DimensionMismatch {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn activations(&self, x: &[f64], mode: Mode<'_>) -> Activations {
        let (xm, hidden_mask) = match mode {
            Mode::Infer => (x.to_vec(), None),
            Mode::Train { input_mask, hidden_mask } => {
                (x.iter().zip(input_mask).map(|(a, m)| a * m).collect(), Some(hidden_mask))
            }
        };
        let w1 = self.w1();
        let b1 = self.b1();
        let w2 = self.w2();
        let mut pre = vec![0.0; self.hidden_dim];
        let mut h = vec![0.0; self.hidden_dim];
        let mut z = self.b2();
        for j in 0..self.hidden_dim {
            let row = &w1[j * self.input_dim..(j + 1) * self.input_dim];
            let a = b1[j] + dot(row, &xm);
            pre[j] = a;
            let mut hj = if a > 0.0 { a } else { 0.0 };
            if let Some(m) = hidden_mask {
                hj *= m[j];
            }
            h[j] = hj;
            z += w2[j] * hj;
        }
        Activations {
            x: xm,
            pre,
            h,
            p_raw: sigmoid(z),
        }
    }

    pub fn forward(&self, x: &[f64], mode: Mode<'_>) -> Result<f64, NetError> {
        self.check_dim(x)?;
        if let Mode::Train { input_mask, hidden_mask } = mode {
            if input_mask.len() != self.input_dim || hidden_mask.len() != self.hidden_dim {
                return Err(NetError::DimensionMismatch {
                    expected: self.input_dim,
                    found: input_mask.len(),
                });
            }
        }
        Ok(clamp_prob(self.activations(x, mode).p_raw))
    }

    /// Inference-mode probability that `x` is buggy.
    pub fn predict(&self, x: &[f64]) -> Result<f64, NetError> {
        self.forward(x, Mode::Infer)
    }

    /// Smallest `|pre-activation|` of the hidden layer; used to avoid ReLU
    /// kinks when comparing against finite differences.
    pub fn min_abs_preactivation(&self, x: &[f64]) -> Result<f64, NetError> {
        self.check_dim(x)?;
        Ok(self
            .activations(x, Mode::Infer)
            .pre
            .iter()
            .fold(f64::INFINITY, |m, a| m.min(a.abs())))
    }

    /// Adds `scale * dLoss/dTheta` for one example to `grad` and returns its
    /// loss.
    fn accumulate(&self, x: &[f64], label: f64, mode: Mode<'_>, scale: f64, grad: &mut [f64]) -> f64 {
        let act = self.activations(x, mode);
        let loss = bce(act.p_raw, label);
        let dz = (act.p_raw - label) * scale;
        if dz == 0.0 {
            return loss;
        }
        let hidden_mask = match mode {
            Mode::Infer => None,
            Mode::Train { hidden_mask, .. } => Some(hidden_mask),
        };
        let n_in = self.input_dim;
        let w2 = self.w2();
        let (w2_start, _) = self.w2_range();
        let b1_start = self.hidden_dim * n_in;
        for j in 0..self.hidden_dim {
            grad[w2_start + j] += dz * act.h[j];
            if act.pre[j] <= 0.0 {
                continue;
            }
            let mut d = dz * w2[j];
            if let Some(m) = hidden_mask {
                d *= m[j];
            }
            if d == 0.0 {
                continue;
            }
            grad[b1_start + j] += d;
            let row = &mut grad[j * n_in..(j + 1) * n_in];
            for (g, xi) in row.iter_mut().zip(&act.x) {
                *g += d * xi;
            }
        }
        let last = grad.len() - 1;
        grad[last] += dz;
        loss
    }

    /// Loss and parameter gradient for one example without dropout.
    pub fn loss_and_gradient(&self, x: &[f64], label: f64) -> Result<(f64, Vec<f64>), NetError> {
        self.check_dim(x)?;
        let mut grad = vec![0.0; self.theta.len()];
        let loss = self.accumulate(x, label, Mode::Infer, 1.0, &mut grad);
        Ok((loss, grad))
    }

    /// Mean loss over a dataset in inference mode.
    pub fn mean_loss(&self, data: &[(Vec<f64>, f64)]) -> Result<f64, NetError> {
        let mut total = 0.0;
        for (x, y) in data {
            total += bce(self.predict(x)?, *y);
        }
        Ok(total / data.len().max(1) as f64)
    }

    /// Central finite-difference gradient with step `h`.
    pub fn numeric_gradient(&self, x: &[f64], label: f64, h: f64) -> Result<Vec<f64>, NetError> {
        self.check_dim(x)?;
        let mut probe = self.clone();
        let mut out = Vec::with_capacity(self.theta.len());
        for i in 0..self.theta.len() {
            let orig = probe.theta[i];
            probe.theta[i] = orig + h;
            let up = bce(probe.activations(x, Mode::Infer).p_raw, label);
            probe.theta[i] = orig - h;
            let down = bce(probe.activations(x, Mode::Infer).p_raw, label);
            probe.theta[i] = orig;
            out.push((up - down) / (2.0 * h));
        }
        Ok(out)
    }

    /// Largest relative error between analytic and finite-difference
    /// gradients. Relative error is `|a - n| / max(|a|, |n|, 1e-6)`.
    pub fn gradient_check(&self, x: &[f64], label: f64) -> Result<f64, NetError> {
        let (_, analytic) = self.loss_and_gradient(x, label)?;
        let numeric = self.numeric_gradient(x, label, 1e-5)?;
        Ok(analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
            .fold(0.0, f64::max))
    }

    /// Mini-batch RMSprop training. Returns the mean training loss of each
    /// epoch, measured on the dropout-masked forward passes used for the
    /// updates.
    pub fn fit(&mut self, data: &[(Vec<f64>, f64)], config: &FitConfig) -> Result<Vec<f64>, NetError> {
        config.validate()?;
        if data.is_empty() {
            return Err(NetError::EmptyData);
        }
        for (x, y) in data {
            self.check_dim(x)?;
            if *y != 0.0 && *y != 1.0 {
                return Err(NetError::BadLabel(*y));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut opt = RmsProp::new(self.theta.len(), config);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut grad = vec![0.0; self.theta.len()];
        let keep = 1.0 - config.dropout;
        let mut input_mask = vec![1.0; self.input_dim];
        let mut hidden_mask = vec![1.0; self.hidden_dim];
        let mut history = Vec::with_capacity(config.epochs);

        for epoch in 0..config.epochs {
            if config.shuffle {
                order.shuffle(&mut rng);
            }
            let mut epoch_loss = 0.0;
            for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let scale = 1.0 / chunk.len() as f64;
                for &i in chunk {
                    if config.dropout > 0.0 {
                        fill_mask(&mut input_mask, keep, &mut rng);
                        fill_mask(&mut hidden_mask, keep, &mut rng);
                    }
                    let mode = Mode::Train {
                        input_mask: &input_mask,
                        hidden_mask: &hidden_mask,
                    };
                    let (x, y) = &data[i];
                    epoch_loss += self.accumulate(x, *y, mode, scale, &mut grad);
                }
                if !epoch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(NetError::NonFiniteLoss { epoch, batch });
                }
                opt.step(&mut self.theta, &grad);
                if self.theta.iter().any(|t| !t.is_finite()) {
                    return Err(NetError::NonFiniteLoss { epoch, batch });
                }
            }
            history.push(epoch_loss / data.len() as f64);
        }
        Ok(history)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        s += x * y;
    }
    s
}

fn fill_mask(mask: &mut [f64], keep: f64, rng: &mut ChaCha8Rng) {
    let scale = 1.0 / keep;
    for m in mask {
        *m = if rng.gen::<f64>() < keep { scale } else { 0.0 };
    }
}

/// RMSprop: `s <- rho s + (1 - rho) g^2; theta <- theta - lr g / sqrt(s + eps)`.
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub cache: Vec<f64>,
}

impl RmsProp {
    pub fn new(n: usize, config: &FitConfig) -> Self {
        RmsProp {
            learning_rate: config.learning_rate,
            rho: config.rho,
            epsilon: config.epsilon,
            cache: vec![0.0; n],
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        for ((t, g), s) in theta.iter_mut().zip(grad).zip(&mut self.cache) {
            *s = self.rho * *s + (1.0 - self.rho) * g * g;
            *t -= self.learning_rate * g / libm::sqrt(*s + self.epsilon);
        }
    }
}
