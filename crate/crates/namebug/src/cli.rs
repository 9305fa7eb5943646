//! Command-line parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use namebug_core::detector::Pattern;

use crate::commands;
use crate::config::{parse_pattern, RunConfig};
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "namebug", version, about = "Learned name-based bug detection for JavaScript")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Global seed; every stage seed is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    pub vocab_cap: Option<usize>,
    /// Output directory for stage files.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Training corpus: directory, .jsonl manifest or single file.
    #[arg(long, global = true, value_name = "PATH")]
    pub train: Option<PathBuf>,
    /// Validation corpus.
    #[arg(long, global = true, value_name = "PATH")]
    pub validate: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PatternArg {
    /// swapped-args, wrong-operator or wrong-operand.
    #[arg(long)]
    pub pattern: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the training corpus and write token streams and the vocabulary.
    Extract,
    /// Train CBOW embeddings, or write the random baseline with --random.
    Embed {
        #[arg(long)]
        random: bool,
    },
    /// Generate positive and negative examples for a pattern.
    Gen {
        #[command(flatten)]
        pattern: PatternArg,
    },
    /// Train a detector from generated examples.
    Train {
        #[command(flatten)]
        pattern: PatternArg,
        /// Use the random baseline embedding.
        #[arg(long)]
        random: bool,
    },
    /// Report likely bugs in a corpus (the validation corpus by default).
    Scan {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        random: bool,
        paths: Vec<PathBuf>,
    },
    /// Evaluate a detector on seeded bugs in the validation corpus.
    Eval {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long)]
        random: bool,
    },
    /// Nearest tokens in embedding space.
    Similar {
        token: String,
        #[arg(short, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        random: bool,
    },
    /// Occurrence coverage of frequency-capped vocabularies.
    Coverage {
        #[arg(long, value_delimiter = ',')]
        caps: Vec<usize>,
    },
    /// Generate a synthetic corpus from a TOML spec.
    Synth { spec: PathBuf },
    /// extract, embed, gen, train and eval in one go.
    Pipeline {
        #[command(flatten)]
        pattern: PatternArg,
        #[arg(long)]
        random: bool,
    },
}

fn resolve_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut c = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        c.seed = s;
    }
    if let Some(v) = g.vocab_cap {
        c.vocab_cap = v;
    }
    if let Some(o) = &g.out {
        c.out = o.clone();
    }
    if let Some(t) = &g.train {
        c.train = Some(t.clone());
    }
    if let Some(v) = &g.validate {
        c.validate = Some(v.clone());
    }
    c.validate()?;
    Ok(c)
}

fn patterns(cfg: &RunConfig, arg: &PatternArg) -> Result<Option<Pattern>> {
    match arg.pattern.as_deref().or(cfg.pattern.as_deref()) {
        Some(p) => parse_pattern(p).map(Some),
        None => Ok(None),
    }
}

fn one_pattern(cfg: &RunConfig, arg: &PatternArg) -> Result<Pattern> {
    patterns(cfg, arg)?.ok_or_else(|| Error::usage("no pattern selected (pass --pattern or set `pattern`)"))
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(&cli.global)?;
    match &cli.command {
        Command::Extract => commands::extract(&cfg, out),
        Command::Embed { random } => commands::embed(&cfg, *random, out),
        Command::Gen { pattern } => commands::gen(&cfg, one_pattern(&cfg, pattern)?, out),
        Command::Train { pattern, random } => commands::train(&cfg, one_pattern(&cfg, pattern)?, *random, out),
        Command::Scan { pattern, threshold, random, paths } => commands::scan(
            &cfg,
            one_pattern(&cfg, pattern)?,
            threshold.unwrap_or(cfg.scan_threshold),
            *random,
            paths,
            out,
        ),
        Command::Eval { pattern, random } => commands::eval(&cfg, one_pattern(&cfg, pattern)?, *random, out),
        Command::Similar { token, k, random } => commands::similar(&cfg, token, *k, *random, out),
        Command::Coverage { caps } => {
            let caps = if caps.is_empty() { commands::DEFAULT_COVERAGE_CAPS.to_vec() } else { caps.clone() };
            commands::coverage(&cfg, &caps, out)
        }
        Command::Synth { spec } => commands::synth(spec, &cfg.out, out),
        Command::Pipeline { pattern, random } => {
            let selected = match patterns(&cfg, pattern)? {
                Some(p) => vec![p],
                None => Pattern::ALL.to_vec(),
            };
            commands::pipeline(&cfg, &selected, *random, out)
        }
    }
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 for usage errors, 2 for input-contract violations, 3 for internal
/// failures.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.kind.exit_code()
        }
    }
}
