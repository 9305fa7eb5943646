//! Per-pattern bug detectors: training, scanning and evaluation.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::embeddings::EmbeddingMatrix;
use crate::hash::{file_seed, Fnv64};
use crate::naming::Vocabulary;
use crate::neuralnet::{FitConfig, Mlp, NetError};
use crate::patterns::{
    binop_sites, binop_vector_len, call_sites, call_vector_len, gen_swapped_args, gen_wrong_operand,
    gen_wrong_operator, operand_sites, BinOpExample, CallSiteExample, EncodeError, Encoder, EncodingTables,
    Origin,
};
use crate::SourceFile;

pub const DEFAULT_HIDDEN: usize = 200;
pub const DEFAULT_THRESHOLDS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pattern {
    SwappedArgs,
    WrongOperator,
    WrongOperand,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::SwappedArgs, Pattern::WrongOperator, Pattern::WrongOperand];

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::SwappedArgs => "swapped-args",
            Pattern::WrongOperator => "wrong-operator",
            Pattern::WrongOperand => "wrong-operand",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }

    /// Length of the feature vector for embedding dimension `dim`.
    pub fn vector_len(self, dim: usize) -> usize {
        match self {
            Pattern::SwappedArgs => call_vector_len(dim),
            Pattern::WrongOperator | Pattern::WrongOperand => binop_vector_len(dim),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Example {
    Call(CallSiteExample),
    BinOp(BinOpExample),
}

impl Example {
    pub fn origin(&self) -> &Origin {
        match self {
            Example::Call(c) => &c.origin,
            Example::BinOp(b) => &b.origin,
        }
    }

    pub fn label(&self) -> crate::patterns::Label {
        match self {
            Example::Call(c) => c.label,
            Example::BinOp(b) => b.label,
        }
    }

    pub fn tuple_strings(&self) -> Vec<String> {
        match self {
            Example::Call(c) => c.tuple_strings().to_vec(),
            Example::BinOp(b) => b.tuple_strings().to_vec(),
        }
    }

    pub fn summary(&self) -> String {
        match self {
            Example::Call(c) => c.summary(),
            Example::BinOp(b) => b.summary(),
        }
    }

    pub fn represent(&self, encoder: &Encoder<'_>) -> Vec<f64> {
        match self {
            Example::Call(c) => encoder.represent_call(c),
            Example::BinOp(b) => encoder.represent_binop(b),
        }
    }
}

/// Runs the pattern's generator over `files`, with per-file seeds derived
/// from `seed` and the file id.
pub fn generate_pairs(pattern: Pattern, files: &[SourceFile], seed: u64) -> Vec<(Example, Example)> {
    let mut out = Vec::new();
    for file in files {
        let s = file_seed(seed, &file.id);
        match pattern {
            Pattern::SwappedArgs => out.extend(
                gen_swapped_args(file, s)
                    .into_iter()
                    .map(|(p, n)| (Example::Call(p), Example::Call(n))),
            ),
            Pattern::WrongOperator => out.extend(
                gen_wrong_operator(file, s)
                    .into_iter()
                    .map(|(p, n)| (Example::BinOp(p), Example::BinOp(n))),
            ),
            Pattern::WrongOperand => out.extend(
                gen_wrong_operand(file, s)
                    .into_iter()
                    .map(|(p, n)| (Example::BinOp(p), Example::BinOp(n))),
            ),
        }
    }
    out
}

/// Unmodified sites the pattern's generator would turn into positives.
pub fn extract_sites(pattern: Pattern, file: &SourceFile) -> Vec<Example> {
    match pattern {
        Pattern::SwappedArgs => call_sites(file).into_iter().map(Example::Call).collect(),
        Pattern::WrongOperator => binop_sites(file).into_iter().map(Example::BinOp).collect(),
        Pattern::WrongOperand => operand_sites(file).into_iter().map(Example::BinOp).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectorError {
    #[error("only {found} training examples, need at least {needed}")]
    InsufficientData { found: usize, needed: usize },
    #[error("{what} checksum {found:016x} does not match the model's {expected:016x}")]
    ChecksumMismatch {
        what: &'static str,
        expected: u64,
        found: u64,
    },
    #[error("embedding dimension {found} does not match the model's {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub hidden: usize,
    pub fit: FitConfig,
    /// Seed for mutation draws during training-data generation.
    pub generator_seed: u64,
    /// Seed for weight initialization.
    pub init_seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            hidden: DEFAULT_HIDDEN,
            fit: FitConfig::default(),
            generator_seed: 0,
            init_seed: 0,
        }
    }
}

/// A trained classifier bound to the vocabulary, embedding and encoding
/// tables it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub pattern: Pattern,
    pub mlp: Mlp,
    pub dim: usize,
    pub vocab_checksum: u64,
    pub embedding_checksum: u64,
    pub tables: EncodingTables,
    pub config: DetectorConfig,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

impl DetectorModel {
    /// Builds an encoder after checking that the inputs are the ones the
    /// model was trained with.
    pub fn encoder<'a>(
        &'a self,
        vocab: &'a Vocabulary,
        embedding: &'a EmbeddingMatrix,
    ) -> Result<Encoder<'a>, DetectorError> {
        if embedding.dim() != self.dim {
            return Err(DetectorError::DimensionMismatch {
                expected: self.dim,
                found: embedding.dim(),
            });
        }
        if vocab.checksum() != self.vocab_checksum {
            return Err(DetectorError::ChecksumMismatch {
                what: "vocabulary",
                expected: self.vocab_checksum,
                found: vocab.checksum(),
            });
        }
        if embedding.checksum() != self.embedding_checksum {
            return Err(DetectorError::ChecksumMismatch {
                what: "embedding",
                expected: self.embedding_checksum,
                found: embedding.checksum(),
            });
        }
        Ok(Encoder::new(vocab, embedding, &self.tables)?)
    }

    pub fn predict(&self, encoder: &Encoder<'_>, example: &Example) -> Result<f64, DetectorError> {
        Ok(self.mlp.predict(&example.represent(encoder))?)
    }

    pub fn checksum(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_str(self.pattern.as_str())
            .write_u64(self.mlp.checksum())
            .write_u64(self.vocab_checksum)
            .write_u64(self.embedding_checksum)
            .write_u64(self.tables.checksum());
        h.finish()
    }
}

pub fn train_detector(
    files: &[SourceFile],
    pattern: Pattern,
    encoder: &Encoder<'_>,
    config: &DetectorConfig,
) -> Result<DetectorModel, DetectorError> {
    let pairs = generate_pairs(pattern, files, config.generator_seed);
    train_on_pairs(&pairs, pattern, encoder, config)
}

/// Trains on already generated pairs, labelling positives 0 and negatives 1.
pub fn train_on_pairs(
    pairs: &[(Example, Example)],
    pattern: Pattern,
    encoder: &Encoder<'_>,
    config: &DetectorConfig,
) -> Result<DetectorModel, DetectorError> {
    config.fit.validate()?;
    let needed = 2 * config.fit.batch_size;
    if 2 * pairs.len() < needed {
        return Err(DetectorError::InsufficientData {
            found: 2 * pairs.len(),
            needed,
        });
    }
    let mut data = Vec::with_capacity(2 * pairs.len());
    for (pos, neg) in pairs {
        data.push((pos.represent(encoder), 0.0));
        data.push((neg.represent(encoder), 1.0));
    }
    let mut mlp = Mlp::init(pattern.vector_len(encoder.dim()), config.hidden, config.init_seed);
    let loss_history = mlp.fit(&data, &config.fit)?;
    Ok(DetectorModel {
        pattern,
        mlp,
        dim: encoder.dim(),
        vocab_checksum: encoder.vocab.checksum(),
        embedding_checksum: encoder.embedding.checksum(),
        tables: encoder.tables.clone(),
        config: config.clone(),
        loss_history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Warning {
    pub origin: Origin,
    pub pattern: Pattern,
    pub probability: f64,
    pub summary: String,
    pub suggested_fix: Option<String>,
}

fn suggested_fix(example: &Example) -> Option<String> {
    match example {
        Example::Call(c) => Some(alloc::format!("swap arguments: {}", c.swapped().summary())),
        Example::BinOp(_) => None,
    }
}

fn check_threshold(t: f64) -> Result<(), DetectorError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(DetectorError::InvalidThreshold(t))
    }
}

/// Predicts every extractable site of `files` and reports those with
/// probability above `threshold`, most likely bugs first.
pub fn scan(
    files: &[SourceFile],
    model: &DetectorModel,
    encoder: &Encoder<'_>,
    threshold: f64,
) -> Result<Vec<Warning>, DetectorError> {
    check_threshold(threshold)?;
    let mut warnings = Vec::new();
    for file in files {
        for site in extract_sites(model.pattern, file) {
            let p = model.predict(encoder, &site)?;
            if p > threshold {
                warnings.push(Warning {
                    origin: site.origin().clone(),
                    pattern: model.pattern,
                    probability: p,
                    summary: site.summary(),
                    suggested_fix: suggested_fix(&site),
                });
            }
        }
    }
    sort_warnings(&mut warnings);
    Ok(warnings)
}

pub fn sort_warnings(warnings: &mut [Warning]) {
    warnings.sort_by(|a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then_with(|| a.origin.cmp(&b.origin))
            .then_with(|| a.summary.cmp(&b.summary))
    });
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub recall: f64,
    pub fps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub per_threshold: Vec<ThresholdRow>,
    pub count_pos: usize,
    pub count_neg: usize,
}

/// Metrics from raw predictions. Accuracy counts positives with `D < 0.5`
/// and negatives with `D >= 0.5`; at threshold `t` a site is reported when
/// `D > t`, recall is the reported fraction of negatives and `fps` the
/// number of reported positives.
pub fn evaluate_predictions(pos: &[f64], neg: &[f64], thresholds: &[f64]) -> EvalReport {
    let correct = pos.iter().filter(|&&d| d < 0.5).count() + neg.iter().filter(|&&d| d >= 0.5).count();
    let total = pos.len() + neg.len();
    let per_threshold = thresholds
        .iter()
        .map(|&t| {
            let caught = neg.iter().filter(|&&d| d > t).count();
            ThresholdRow {
                threshold: t,
                recall: if neg.is_empty() { 0.0 } else { caught as f64 / neg.len() as f64 },
                fps: pos.iter().filter(|&&d| d > t).count(),
            }
        })
        .collect();
    EvalReport {
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        per_threshold,
        count_pos: pos.len(),
        count_neg: neg.len(),
    }
}

/// Predictions for the generator's pairs on `files`: (positives, negatives).
pub fn predict_pairs(
    files: &[SourceFile],
    model: &DetectorModel,
    encoder: &Encoder<'_>,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), DetectorError> {
    let pairs = generate_pairs(model.pattern, files, seed);
    let mut pos = Vec::with_capacity(pairs.len());
    let mut neg = Vec::with_capacity(pairs.len());
    for (p, n) in &pairs {
        pos.push(model.predict(encoder, p)?);
        neg.push(model.predict(encoder, n)?);
    }
    Ok((pos, neg))
}

/// Evaluates on held-out files with seeded mutations as ground truth.
pub fn evaluate(
    files: &[SourceFile],
    model: &DetectorModel,
    encoder: &Encoder<'_>,
    thresholds: &[f64],
    seed: u64,
) -> Result<EvalReport, DetectorError> {
    if thresholds.is_empty() {
        return Err(DetectorError::InvalidThreshold(f64::NAN));
    }
    for &t in thresholds {
        check_threshold(t)?;
    }
    let (pos, neg) = predict_pairs(files, model, encoder, seed)?;
    let needed = 2 * model.config.fit.batch_size;
    if pos.len() + neg.len() < needed {
        return Err(DetectorError::InsufficientData {
            found: pos.len() + neg.len(),
            needed,
        });
    }
    Ok(evaluate_predictions(&pos, &neg, thresholds))
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} {} {} {}", self.probability, self.pattern, self.origin, self.summary)?;
        if let Some(fix) = &self.suggested_fix {
            write!(f, " ({fix})")?;
        }
        Ok(())
    }
}

impl EvalReport {
    pub fn summary_line(&self) -> String {
        let mut s = alloc::format!(
            "accuracy {:.4} over {} positive and {} negative examples",
            self.accuracy,
            self.count_pos,
            self.count_neg
        );
        for row in &self.per_threshold {
            s.push_str(&alloc::format!(
                "; t={}: recall {:.4}, fps {}",
                row.threshold,
                row.recall,
                row.fps
            ));
        }
        s
    }
}
