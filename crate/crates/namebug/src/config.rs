//! Run configuration, read from TOML.
//!
//! Every field has a default, so an empty file is a valid configuration.
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use namebug_core::detector::{DetectorConfig, Pattern, DEFAULT_HIDDEN, DEFAULT_THRESHOLDS};
use namebug_core::embeddings::{CbowConfig, Objective};
use namebug_core::hash::{mix64, Fnv64};
use namebug_core::neuralnet::FitConfig;
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CbowSection {
    pub window: usize,
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Zero selects the full softmax.
    pub negatives: usize,
    pub linear_decay: bool,
}

impl Default for CbowSection {
    fn default() -> Self {
        let c = CbowConfig::default();
        CbowSection {
            window: c.window,
            dim: c.dim,
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            negatives: 0,
            linear_decay: c.linear_decay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub shuffle: bool,
}

impl Default for FitSection {
    fn default() -> Self {
        let f = FitConfig::default();
        FitSection {
            epochs: f.epochs,
            batch_size: f.batch_size,
            dropout: f.dropout,
            learning_rate: f.learning_rate,
            rho: f.rho,
            epsilon: f.epsilon,
            shuffle: f.shuffle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub validate: Option<PathBuf>,
    pub out: PathBuf,
    pub vocab_cap: usize,
    pub seed: u64,
    /// Overrides the seed derived from `seed`.
    pub tables_seed: Option<u64>,
    pub hidden: usize,
    pub pattern: Option<String>,
    pub thresholds: Vec<f64>,
    pub scan_threshold: f64,
    pub cbow: CbowSection,
    pub fit: FitSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: None,
            validate: None,
            out: PathBuf::from("out"),
            vocab_cap: 10_000,
            seed: 0,
            tables_seed: None,
            hidden: DEFAULT_HIDDEN,
            pattern: None,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            scan_threshold: 0.5,
            cbow: CbowSection::default(),
            fit: FitSection::default(),
        }
    }
}

// Sub-seed streams.
const CBOW: u64 = 1;
const RANDOM: u64 = 2;
const TABLES: u64 = 3;
const GENERATOR: u64 = 4;
const INIT: u64 = 5;
const FIT: u64 = 6;
const EVAL: u64 = 7;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::usage(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a config file; relative paths become relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e).context("config"))?;
        let mut c = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        c.train.as_mut().map(fix);
        c.validate.as_mut().map(fix);
        fix(&mut c.out);
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_cap < 2 {
            return Err(Error::usage("vocab_cap must be at least 2"));
        }
        if self.hidden == 0 {
            return Err(Error::usage("hidden must be positive"));
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::usage("thresholds must be a non-empty list of values in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.scan_threshold) {
            return Err(Error::usage("scan_threshold must be in [0, 1]"));
        }
        if let Some(p) = &self.pattern {
            parse_pattern(p)?;
        }
        if self.cbow.dim == 0 {
            return Err(Error::usage("cbow.dim must be positive"));
        }
        // A one-dimensional embedding is valid for the random baseline; CBOW
        // rejects it when it runs.
        let mut cbow = self.cbow_config();
        cbow.dim = cbow.dim.max(2);
        cbow.validate().map_err(|e| Error::usage(e.to_string()))?;
        self.fit_config().validate().map_err(|e| Error::usage(e.to_string()))?;
        Ok(())
    }

    fn sub_seed(&self, stream: u64) -> u64 {
        mix64(self.seed ^ mix64(stream))
    }

    pub fn cbow_config(&self) -> CbowConfig {
        CbowConfig {
            window: self.cbow.window,
            dim: self.cbow.dim,
            epochs: self.cbow.epochs,
            learning_rate: self.cbow.learning_rate,
            seed: self.sub_seed(CBOW),
            objective: match self.cbow.negatives {
                0 => Objective::FullSoftmax,
                k => Objective::NegativeSampling { negatives: k },
            },
            linear_decay: self.cbow.linear_decay,
        }
    }

    pub fn random_seed(&self) -> u64 {
        self.sub_seed(RANDOM)
    }

    pub fn tables_seed(&self) -> u64 {
        self.tables_seed.unwrap_or_else(|| self.sub_seed(TABLES))
    }

    pub fn generator_seed(&self) -> u64 {
        self.sub_seed(GENERATOR)
    }

    pub fn eval_seed(&self) -> u64 {
        self.sub_seed(EVAL)
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            epochs: self.fit.epochs,
            batch_size: self.fit.batch_size,
            dropout: self.fit.dropout,
            learning_rate: self.fit.learning_rate,
            rho: self.fit.rho,
            epsilon: self.fit.epsilon,
            seed: self.sub_seed(FIT),
            shuffle: self.fit.shuffle,
        }
    }

    pub fn detector_config(&self) -> DetectorConfig {
        DetectorConfig {
            hidden: self.hidden,
            fit: self.fit_config(),
            generator_seed: self.generator_seed(),
            init_seed: self.sub_seed(INIT),
        }
    }

    /// Checksum of every setting that shapes a stage output. Paths, the
    /// pattern selection and thresholds are excluded: they choose what to
    /// run, not what an artifact contains.
    pub fn checksum(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_u64(self.vocab_cap as u64)
            .write_u64(self.seed)
            .write_u64(self.tables_seed())
            .write_u64(self.hidden as u64);
        let c = &self.cbow;
        h.write_u64(c.window as u64)
            .write_u64(c.dim as u64)
            .write_u64(c.epochs as u64)
            .write_f64(c.learning_rate)
            .write_u64(c.negatives as u64)
            .write_u64(c.linear_decay as u64);
        let f = &self.fit;
        h.write_u64(f.epochs as u64)
            .write_u64(f.batch_size as u64)
            .write_f64(f.dropout)
            .write_f64(f.learning_rate)
            .write_f64(f.rho)
            .write_f64(f.epsilon)
            .write_u64(f.shuffle as u64);
        h.finish()
    }
}

pub fn parse_pattern(s: &str) -> Result<Pattern> {
    Pattern::parse(s).ok_or_else(|| {
        Error::usage(format!(
            "unknown pattern {s:?} (expected swapped-args, wrong-operator or wrong-operand)"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.vocab_cap, 10_000);
        assert_eq!(c.thresholds, [0.5, 0.6, 0.7, 0.8, 0.9]);
    }

    #[test]
    fn sections_and_overrides() {
        let c = RunConfig::parse(
            "train = 'a'\nseed = 9\npattern = 'wrong-operand'\n[cbow]\ndim = 16\n[fit]\nepochs = 3\n",
        )
        .unwrap();
        assert_eq!(c.train.as_deref(), Some(Path::new("a")));
        assert_eq!(c.cbow_config().dim, 16);
        assert_eq!(c.fit_config().epochs, 3);
        assert_ne!(c.checksum(), RunConfig::default().checksum());
        let mut d = c.clone();
        d.pattern = None;
        d.thresholds = vec![0.7];
        d.out = PathBuf::from("elsewhere");
        assert_eq!(d.checksum(), c.checksum());
    }

    #[test]
    fn sub_seeds_differ() {
        let c = RunConfig::default();
        let seeds = [
            c.cbow_config().seed,
            c.random_seed(),
            c.tables_seed(),
            c.generator_seed(),
            c.detector_config().init_seed,
            c.fit_config().seed,
            c.eval_seed(),
        ];
        for i in 0..seeds.len() {
            for j in i + 1..seeds.len() {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
    }

    #[test]
    fn bad_configs_are_usage_errors() {
        for text in [
            "vocab_cap = 1",
            "unknown = 3",
            "pattern = 'nope'",
            "thresholds = []",
            "thresholds = [1.5]",
            "[cbow]\nwindow = 3",
            "[fit]\ndropout = 1.0",
            "seed = 'x'",
        ] {
            let e = RunConfig::parse(text).unwrap_err();
            assert_eq!(e.kind, crate::error::ErrorKind::Usage, "{text}");
        }
    }
}
