//! CBOW embeddings for identifiers and literals, the random binary baseline,
//! and nearest-neighbour queries.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hash::Fnv64;
use crate::naming::{is_name_token, Vocabulary, NONE_INDEX, UNK_INDEX};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("CBOW dataset is empty")]
    EmptyDataset,
    #[error("cannot assign {vocab} unique binary vectors of length {dim}")]
    CollisionExhaustion { dim: usize, vocab: usize },
    #[error("token {0:?} is not in the vocabulary")]
    UnknownToken(String),
    #[error("{0:?} is a reserved token")]
    ReservedToken(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid embedding matrix: {0}")]
    InvalidMatrix(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    FullSoftmax,
    NegativeSampling { negatives: usize },
}

/// CBOW hyperparameters. Defaults are desk-scale (`dim` 64, `window` 10);
/// larger values such as 200 and 20 work the same way. Epoch count and
/// learning rate are artifact choices.
#[derive(Debug, Clone, PartialEq)]
pub struct CbowConfig {
    /// Total context size; half before and half after the target.
    pub window: usize,
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub objective: Objective,
    /// Linearly decay the learning rate towards zero over the run.
    pub linear_decay: bool,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig {
            window: 10,
            dim: 64,
            epochs: 5,
            learning_rate: 0.05,
            seed: 1,
            objective: Objective::FullSoftmax,
            linear_decay: false,
        }
    }
}

impl CbowConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.window == 0 || self.window % 2 != 0 {
            return Err(EmbeddingError::InvalidConfig(alloc::format!(
                "window must be even and positive, got {}",
                self.window
            )));
        }
        if self.dim < 2 {
            return Err(EmbeddingError::InvalidConfig("dimension must be at least 2".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(EmbeddingError::InvalidConfig("learning rate must be positive".into()));
        }
        if let Objective::NegativeSampling { negatives: 0 } = self.objective {
            return Err(EmbeddingError::InvalidConfig("negative sampling needs k >= 1".into()));
        }
        Ok(())
    }
}

/// One CBOW training pair: vocabulary indices of the context and the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CbowPair {
    pub context: Vec<usize>,
    pub target: usize,
}

/// Row-major `|V| x dim` matrix bound to a vocabulary by checksum.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
    vocab_checksum: u64,
}

impl EmbeddingMatrix {
    /// Validates shape, finiteness and the zero `NONE` row.
    pub fn from_rows(dim: usize, data: Vec<f64>, vocab_checksum: u64) -> Result<Self, EmbeddingError> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(EmbeddingError::InvalidMatrix(alloc::format!(
                "{} values do not form rows of length {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::InvalidMatrix("non-finite entry".into()));
        }
        let m = EmbeddingMatrix {
            dim,
            data,
            vocab_checksum,
        };
        if m.len() > NONE_INDEX && m.row(NONE_INDEX).iter().any(|&v| v != 0.0) {
            return Err(EmbeddingError::InvalidMatrix("NONE row must be zero".into()));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn vocab_checksum(&self) -> u64 {
        self.vocab_checksum
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Checksum over the vocabulary binding and the exact values.
    pub fn checksum(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_u64(self.dim as u64).write_u64(self.vocab_checksum);
        for v in &self.data {
            h.write_f64(*v);
        }
        h.finish()
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = libm::sqrt(a.iter().map(|x| x * x).sum());
    let nb = libm::sqrt(b.iter().map(|x| x * x).sum());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// One pair per in-vocabulary `ID:`/`LIT:` occurrence that has at least
/// one context token. Windows are truncated at stream boundaries and
/// out-of-vocabulary context tokens map to `UNK`.
pub fn build_cbow_dataset<S: AsRef<str>>(
    streams: &[Vec<S>],
    vocab: &Vocabulary,
    window: usize,
) -> Vec<CbowPair> {
    let half = window / 2;
    let mut pairs = Vec::new();
    for stream in streams {
        let ids: Vec<usize> = stream.iter().map(|t| vocab.lookup(t.as_ref())).collect();
        for (i, tok) in stream.iter().enumerate() {
            let tok = tok.as_ref();
            if !is_name_token(tok) {
                continue;
            }
            let Some(target) = vocab.get(tok) else { continue };
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(stream.len());
            let context: Vec<usize> = (lo..hi).filter(|&j| j != i).map(|j| ids[j]).collect();
            if !context.is_empty() {
                pairs.push(CbowPair { context, target });
            }
        }
    }
    pairs
}

/// Result of a CBOW run.
#[derive(Debug, Clone)]
pub struct CbowModel {
    pub embedding: EmbeddingMatrix,
    /// Mean per-pair loss of each epoch, measured before each update.
    pub epoch_loss: Vec<f64>,
}

/// Trains CBOW and returns the input-side matrix. Pairs are visited in
/// dataset order, so the result depends only on (seed, config, dataset).
pub fn train_cbow(
    dataset: &[CbowPair],
    config: &CbowConfig,
    vocab: &Vocabulary,
) -> Result<CbowModel, EmbeddingError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(EmbeddingError::EmptyDataset);
    }
    let v = vocab.len();
    let e = config.dim;
    if let Some(bad) = dataset
        .iter()
        .flat_map(|p| p.context.iter().chain(core::iter::once(&p.target)))
        .find(|&&i| i >= v)
    {
        return Err(EmbeddingError::InvalidConfig(alloc::format!(
            "dataset index {bad} outside vocabulary of {v}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input: Vec<f64> = (0..v * e)
        .map(|_| (rng.gen::<f64>() - 0.5) / e as f64)
        .collect();
    input[NONE_INDEX * e..(NONE_INDEX + 1) * e].fill(0.0);
    let mut output = vec![0.0f64; v * e];

    let noise = match config.objective {
        Objective::NegativeSampling { .. } => Some(NoiseTable::new(vocab)),
        Objective::FullSoftmax => None,
    };

    let total_steps = (config.epochs * dataset.len()) as f64;
    let mut step = 0usize;
    let mut hidden = vec![0.0; e];
    let mut grad_hidden = vec![0.0; e];
    let mut scores = vec![0.0; v];
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        let mut loss_sum = 0.0;
        for pair in dataset {
            let lr = if config.linear_decay {
                config.learning_rate * (1.0 - step as f64 / total_steps).max(1e-4)
            } else {
                config.learning_rate
            };
            step += 1;

            hidden.fill(0.0);
            for &c in &pair.context {
                for (h, x) in hidden.iter_mut().zip(&input[c * e..(c + 1) * e]) {
                    *h += x;
                }
            }
            let inv = 1.0 / pair.context.len() as f64;
            hidden.iter_mut().for_each(|h| *h *= inv);
            grad_hidden.fill(0.0);

            match (&config.objective, &noise) {
                (Objective::NegativeSampling { negatives }, Some(noise)) => {
                    loss_sum += sgns_update(
                        &mut output,
                        e,
                        &hidden,
                        &mut grad_hidden,
                        pair.target,
                        *negatives,
                        noise,
                        &mut rng,
                        lr,
                    );
                }
                _ => {
                    loss_sum += softmax_update(
                        &mut output,
                        e,
                        &hidden,
                        &mut grad_hidden,
                        &mut scores,
                        pair.target,
                        lr,
                    );
                }
            }

            let scale = lr * inv;
            for &c in &pair.context {
                if c == NONE_INDEX {
                    continue;
                }
                for (w, g) in input[c * e..(c + 1) * e].iter_mut().zip(&grad_hidden) {
                    *w -= scale * g;
                }
            }
        }
        epoch_loss.push(loss_sum / dataset.len() as f64);
    }

    Ok(CbowModel {
        embedding: EmbeddingMatrix::from_rows(e, input, vocab.checksum())?,
        epoch_loss,
    })
}

/// Full-softmax step. Accumulates the hidden-layer gradient, updates every
/// output row and returns the cross-entropy before the update.
fn softmax_update(
    output: &mut [f64],
    e: usize,
    hidden: &[f64],
    grad_hidden: &mut [f64],
    scores: &mut [f64],
    target: usize,
    lr: f64,
) -> f64 {
    for (j, s) in scores.iter_mut().enumerate() {
        *s = dot(&output[j * e..(j + 1) * e], hidden);
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for s in scores.iter_mut() {
        *s = libm::exp(*s - max);
        z += *s;
    }
    let loss = -libm::log((scores[target] / z).max(1e-300));
    for (j, s) in scores.iter().enumerate() {
        let g = s / z - if j == target { 1.0 } else { 0.0 };
        let row = &mut output[j * e..(j + 1) * e];
        for k in 0..e {
            grad_hidden[k] += g * row[k];
            row[k] -= lr * g * hidden[k];
        }
    }
    loss
}

#[allow(clippy::too_many_arguments)]
fn sgns_update(
    output: &mut [f64],
    e: usize,
    hidden: &[f64],
    grad_hidden: &mut [f64],
    target: usize,
    negatives: usize,
    noise: &NoiseTable,
    rng: &mut ChaCha8Rng,
    lr: f64,
) -> f64 {
    let mut loss = 0.0;
    let mut apply = |j: usize, label: f64, output: &mut [f64]| {
        let row = &mut output[j * e..(j + 1) * e];
        let p = sigmoid(dot(row, hidden));
        loss -= if label > 0.5 {
            libm::log(p.max(1e-300))
        } else {
            libm::log((1.0 - p).max(1e-300))
        };
        let g = p - label;
        for k in 0..e {
            grad_hidden[k] += g * row[k];
            row[k] -= lr * g * hidden[k];
        }
    };
    apply(target, 1.0, output);
    for _ in 0..negatives {
        let j = noise.sample(rng);
        if j != target {
            apply(j, 0.0, output);
        }
    }
    loss
}

/// Unigram^0.75 sampler over non-reserved tokens.
struct NoiseTable {
    cumulative: Vec<f64>,
    offset: usize,
}

impl NoiseTable {
    fn new(vocab: &Vocabulary) -> Self {
        let offset = NONE_INDEX + 1;
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = vocab.entries()[offset..]
            .iter()
            .map(|(_, n)| {
                acc += libm::pow(*n as f64, 0.75);
                acc
            })
            .collect();
        if cumulative.is_empty() {
            // Degenerate vocabulary: only reserved tokens. Sample UNK.
            cumulative.push(1.0);
            return NoiseTable { cumulative, offset: UNK_INDEX };
        }
        NoiseTable { cumulative, offset }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let x = rng.gen::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= x);
        self.offset + i.min(self.cumulative.len() - 1)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Baseline embedding: a unique, non-zero, random 0/1 vector per token
/// (including `UNK`); `NONE` stays zero.
pub fn random_embedding(vocab: &Vocabulary, dim: usize, seed: u64) -> Result<EmbeddingMatrix, EmbeddingError> {
    if dim == 0 {
        return Err(EmbeddingError::InvalidConfig("dimension must be positive".into()));
    }
    let v = vocab.len();
    // |V| - 1 non-zero patterns are needed; 2^dim - 1 exist.
    if dim < 64 && (1u128 << dim) < v as u128 {
        return Err(EmbeddingError::CollisionExhaustion { dim, vocab: v });
    }
    let words = dim.div_ceil(64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used: BTreeSet<Vec<u64>> = BTreeSet::new();
    let mut data = vec![0.0; v * dim];
    for i in 0..v {
        if i == NONE_INDEX {
            continue;
        }
        let bits = loop {
            let mut bits: Vec<u64> = (0..words).map(|_| rng.gen::<u64>()).collect();
            let rem = dim % 64;
            if rem != 0 {
                *bits.last_mut().unwrap() &= (1u64 << rem) - 1;
            }
            if bits.iter().any(|&w| w != 0) && !used.contains(&bits) {
                break bits;
            }
        };
        for k in 0..dim {
            if bits[k / 64] >> (k % 64) & 1 == 1 {
                data[i * dim + k] = 1.0;
            }
        }
        used.insert(bits);
    }
    EmbeddingMatrix::from_rows(dim, data, vocab.checksum())
}

/// The `k` most cosine-similar tokens, excluding the query, `UNK` and
/// `NONE`. Ties are broken by token order.
pub fn nearest(
    matrix: &EmbeddingMatrix,
    vocab: &Vocabulary,
    token: &str,
    k: usize,
) -> Result<Vec<(String, f64)>, EmbeddingError> {
    let q = vocab
        .get(token)
        .ok_or_else(|| EmbeddingError::UnknownToken(token.to_string()))?;
    if Vocabulary::is_reserved(q) {
        return Err(EmbeddingError::ReservedToken(token.to_string()));
    }
    if matrix.len() != vocab.len() || matrix.vocab_checksum() != vocab.checksum() {
        return Err(EmbeddingError::InvalidMatrix(
            "embedding is bound to a different vocabulary".into(),
        ));
    }
    let query = matrix.row(q);
    let mut scored: Vec<(&str, f64)> = (0..vocab.len())
        .filter(|&i| i != q && !Vocabulary::is_reserved(i))
        .map(|i| (vocab.token(i).unwrap(), cosine(query, matrix.row(i))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(t, s)| (t.to_string(), s))
        .collect())
}
