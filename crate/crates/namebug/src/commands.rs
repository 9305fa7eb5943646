//! Pipeline stages. Each stage reads its inputs from the output directory,
//! verifies their checksums and writes one primary output file.
//!
//! | stage    | reads                                   | writes                      |
//! |----------|-----------------------------------------|-----------------------------|
//! | extract  | train corpus                            | tokens.txt, vocab.txt       |
//! | embed    | tokens.txt, vocab.txt                   | embedding[-random].txt      |
//! | gen      | train corpus, vocab.txt                 | examples-P.txt              |
//! | train    | examples-P.txt, vocab, embedding        | model-P[-random].txt        |
//! | scan     | checkpoint, vocab, embedding, corpus    | warnings-P[-random].txt     |
//! | eval     | checkpoint, vocab, embedding, validate  | eval-P[-random].json        |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use namebug_core::detector::{self, DetectorModel, Pattern};
use namebug_core::embeddings::{build_cbow_dataset, nearest, random_embedding, train_cbow, EmbeddingMatrix};
use namebug_core::naming::{build_vocabulary, coverage_curve, TokenCounts, Vocabulary};
use namebug_core::patterns::EncodingTables;
use namebug_core::synthcorpus::{generate, Split};

use crate::config::RunConfig;
use crate::corpus::{self, Corpus};
use crate::error::{Error, Result};
use crate::formats::{self, check_checksum, EmbeddingKind, ExamplesFile, SynthSpecToml, TokenFile};

pub const TOKENS_FILE: &str = "tokens.txt";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const GROUND_TRUTH_FILE: &str = "ground-truth.tsv";

fn variant(random: bool) -> &'static str {
    if random {
        "-random"
    } else {
        ""
    }
}

pub fn embedding_file(random: bool) -> String {
    format!("embedding{}.txt", variant(random))
}

pub fn examples_file(pattern: Pattern) -> String {
    format!("examples-{pattern}.txt")
}

pub fn model_file(pattern: Pattern, random: bool) -> String {
    format!("model-{pattern}{}.txt", variant(random))
}

pub fn warnings_file(pattern: Pattern, random: bool) -> String {
    format!("warnings-{pattern}{}.txt", variant(random))
}

pub fn eval_file(pattern: Pattern, random: bool) -> String {
    format!("eval-{pattern}{}.json", variant(random))
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_input(path: &Path, what: &str, producer: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::input(format!("missing {what} {} (run `namebug {producer}` first)", path.display()))
        } else {
            Error::io(path, e)
        }
    })
}

fn corpus_path<'a>(path: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::usage(format!("no {name} corpus configured (set `{name}` or pass --{name})")))
}

/// Loads a corpus, listing per-file failures. Fails only when nothing could
/// be processed.
fn load_corpus(path: &Path, out: &mut dyn Write) -> Result<Corpus> {
    let c = corpus::load(path)?;
    for f in &c.failures {
        let _ = writeln!(out, "skipped {}: {}", f.id, f.message);
    }
    if c.input_count() == 0 {
        return Err(Error::input(format!("no input files in {}", path.display())));
    }
    if c.files.is_empty() {
        return Err(Error::input(format!(
            "no file in {} could be processed ({} failures)",
            path.display(),
            c.failures.len()
        )));
    }
    Ok(c)
}

pub fn load_vocab(cfg: &RunConfig) -> Result<Vocabulary> {
    let path = out_path(cfg, VOCAB_FILE);
    let text = read_input(&path, "vocabulary", "extract")?;
    formats::read_vocab(&text, cfg.vocab_cap).map_err(|e| e.context(path.display()))
}

pub fn load_embedding(cfg: &RunConfig, vocab: &Vocabulary, random: bool) -> Result<EmbeddingMatrix> {
    let path = out_path(cfg, &embedding_file(random));
    let producer = if random { "embed --random" } else { "embed" };
    let text = read_input(&path, "embedding", producer)?;
    let (header, matrix) = formats::read_embedding(&text, vocab).map_err(|e| e.context(path.display()))?;
    check_checksum("config", cfg.checksum(), header.config).map_err(|e| e.context(path.display()))?;
    Ok(matrix)
}

pub fn load_model(cfg: &RunConfig, pattern: Pattern, random: bool) -> Result<DetectorModel> {
    let path = out_path(cfg, &model_file(pattern, random));
    let text = read_input(&path, "checkpoint", "train")?;
    let (model, config) = formats::read_checkpoint(&text).map_err(|e| e.context(path.display()))?;
    check_checksum("config", cfg.checksum(), config).map_err(|e| e.context(path.display()))?;
    if model.pattern != pattern {
        return Err(Error::input(format!("{}: checkpoint is for {}", path.display(), model.pattern)));
    }
    Ok(model)
}

pub fn extract(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let path = corpus_path(&cfg.train, "train")?;
    let c = load_corpus(path, out)?;
    let vocab = build_vocabulary(&c.streams, cfg.vocab_cap)?;
    let tokens = TokenFile {
        config: cfg.checksum(),
        files: c.files.iter().map(|f| f.id.clone()).zip(c.streams).collect(),
    };
    write_file(&out_path(cfg, TOKENS_FILE), &formats::write_tokens(&tokens))?;
    write_file(&out_path(cfg, VOCAB_FILE), &formats::write_vocab(&vocab))?;
    let _ = writeln!(
        out,
        "extracted {} files ({} failed), vocabulary of {} tokens",
        c.files.len(),
        c.failures.len(),
        vocab.len()
    );
    Ok(())
}

fn load_tokens(cfg: &RunConfig) -> Result<TokenFile> {
    let path = out_path(cfg, TOKENS_FILE);
    let tokens = formats::read_tokens(&read_input(&path, "token streams", "extract")?)?;
    check_checksum("config", cfg.checksum(), tokens.config).map_err(|e| e.context(path.display()))?;
    Ok(tokens)
}

pub fn embed(cfg: &RunConfig, random: bool, out: &mut dyn Write) -> Result<()> {
    let vocab = load_vocab(cfg)?;
    let (matrix, kind) = if random {
        let m = random_embedding(&vocab, cfg.cbow.dim, cfg.random_seed())?;
        (m, EmbeddingKind::Random)
    } else {
        let tokens = load_tokens(cfg)?;
        let streams: Vec<Vec<String>> = tokens.files.into_iter().map(|(_, s)| s).collect();
        let cbow = cfg.cbow_config();
        let dataset = build_cbow_dataset(&streams, &vocab, cbow.window);
        let model = train_cbow(&dataset, &cbow, &vocab)?;
        if let Some(loss) = model.epoch_loss.last() {
            let _ = writeln!(out, "CBOW: {} pairs, final epoch loss {loss:.6}", dataset.len());
        }
        (model.embedding, EmbeddingKind::Cbow)
    };
    let path = out_path(cfg, &embedding_file(random));
    write_file(&path, &formats::write_embedding(&matrix, &vocab, cfg.checksum(), kind))?;
    let _ = writeln!(out, "wrote {} ({} x {})", path.display(), matrix.len(), matrix.dim());
    Ok(())
}

pub fn gen(cfg: &RunConfig, pattern: Pattern, out: &mut dyn Write) -> Result<()> {
    let vocab = load_vocab(cfg)?;
    let c = load_corpus(corpus_path(&cfg.train, "train")?, out)?;
    let pairs = detector::generate_pairs(pattern, &c.files, cfg.generator_seed());
    let file = ExamplesFile { pattern, vocab: vocab.checksum(), config: cfg.checksum(), pairs };
    write_file(&out_path(cfg, &examples_file(pattern)), &formats::write_examples(&file))?;
    let _ = writeln!(out, "{pattern}: {} positive/negative pairs", file.pairs.len());
    Ok(())
}

pub fn train(cfg: &RunConfig, pattern: Pattern, random: bool, out: &mut dyn Write) -> Result<()> {
    let path = out_path(cfg, &examples_file(pattern));
    let examples = formats::read_examples(&read_input(&path, "examples", "gen")?).map_err(|e| e.context(path.display()))?;
    check_checksum("config", cfg.checksum(), examples.config).map_err(|e| e.context(path.display()))?;
    if examples.pattern != pattern {
        return Err(Error::input(format!("{}: examples are for {}", path.display(), examples.pattern)));
    }
    let vocab = load_vocab(cfg)?;
    check_checksum("vocabulary", examples.vocab, vocab.checksum())
        .map_err(|e| e.context(format!("{} and {VOCAB_FILE}", path.display())))?;
    let embedding = load_embedding(cfg, &vocab, random)?;
    check_checksum("vocabulary", examples.vocab, embedding.vocab_checksum())
        .map_err(|e| e.context(format!("{} and {}", path.display(), embedding_file(random))))?;
    let tables = EncodingTables::new(cfg.tables_seed());
    let encoder = namebug_core::patterns::Encoder::new(&vocab, &embedding, &tables)
        .map_err(|e| Error::input(e.to_string()))?;
    let model = detector::train_on_pairs(&examples.pairs, pattern, &encoder, &cfg.detector_config())?;
    let model_path = out_path(cfg, &model_file(pattern, random));
    write_file(&model_path, &formats::write_checkpoint(&model, cfg.checksum()))?;
    let loss = model.loss_history.last().copied().unwrap_or(f64::NAN);
    let _ = writeln!(out, "{pattern}: trained on {} pairs, final loss {loss:.6}", examples.pairs.len());
    Ok(())
}

pub fn scan(
    cfg: &RunConfig,
    pattern: Pattern,
    threshold: f64,
    random: bool,
    inputs: &[PathBuf],
    out: &mut dyn Write,
) -> Result<()> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::usage(format!("threshold {threshold} is outside [0, 1]")));
    }
    let model = load_model(cfg, pattern, random)?;
    let vocab = load_vocab(cfg)?;
    let embedding = load_embedding(cfg, &vocab, random)?;
    let encoder = model.encoder(&vocab, &embedding)?;
    let mut files = Vec::new();
    if inputs.is_empty() {
        files = load_corpus(corpus_path(&cfg.validate, "validate")?, out)?.files;
    }
    for p in inputs {
        files.extend(load_corpus(p, out)?.files);
    }
    let warnings = detector::scan(&files, &model, &encoder, threshold)?;
    let path = out_path(cfg, &warnings_file(pattern, random));
    write_file(&path, &formats::write_warnings(&warnings, pattern, threshold, cfg.checksum()))?;
    for w in &warnings {
        let _ = writeln!(out, "{w}");
    }
    let _ = writeln!(out, "{} warnings in {} files", warnings.len(), files.len());
    Ok(())
}

pub fn eval(cfg: &RunConfig, pattern: Pattern, random: bool, out: &mut dyn Write) -> Result<()> {
    let model = load_model(cfg, pattern, random)?;
    let vocab = load_vocab(cfg)?;
    let embedding = load_embedding(cfg, &vocab, random)?;
    let encoder = model.encoder(&vocab, &embedding)?;
    let files = load_corpus(corpus_path(&cfg.validate, "validate")?, out)?.files;
    let report = detector::evaluate(&files, &model, &encoder, &cfg.thresholds, cfg.eval_seed())?;
    write_file(
        &out_path(cfg, &eval_file(pattern, random)),
        &formats::write_eval(&report, pattern, cfg.checksum()),
    )?;
    let _ = writeln!(out, "{pattern}{}: {}", variant(random), report.summary_line());
    Ok(())
}

pub fn similar(cfg: &RunConfig, token: &str, k: usize, random: bool, out: &mut dyn Write) -> Result<()> {
    let vocab = load_vocab(cfg)?;
    let embedding = load_embedding(cfg, &vocab, random)?;
    for (tok, score) in nearest(&embedding, &vocab, token, k)? {
        let _ = writeln!(out, "{tok}\t{score:.6}");
    }
    Ok(())
}

pub const DEFAULT_COVERAGE_CAPS: [usize; 6] = [100, 1_000, 2_000, 5_000, 10_000, 20_000];

pub fn coverage(cfg: &RunConfig, caps: &[usize], out: &mut dyn Write) -> Result<()> {
    let tokens = load_tokens(cfg)?;
    let mut counts = TokenCounts::new();
    for (_, stream) in &tokens.files {
        counts.add_stream(stream);
    }
    let _ = writeln!(out, "# {} distinct tokens, {} occurrences", counts.distinct(), counts.total());
    for (cap, fraction) in coverage_curve(&counts, caps)? {
        let _ = writeln!(out, "{cap}\t{fraction:.6}");
    }
    Ok(())
}

/// Writes `train/` and `heldout/` source trees and the ground-truth ledger
/// under `dir`.
pub fn synth(spec_path: &Path, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let text = read_input(spec_path, "spec", "synth")?;
    let file = SynthSpecToml::parse(&text)?;
    let mut spec = file.convention_spec()?;
    let spec_checksum = spec.checksum();
    let train = generate(&spec, Split::Train)?;
    spec.file_count = file.heldout_file_count;
    let held = generate(&spec, Split::HeldOut)?;
    let mut bugs = Vec::new();
    for corpus in [&train, &held] {
        for f in &corpus.files {
            write_file(&dir.join(&f.id), &f.source)?;
        }
        bugs.extend(corpus.ground_truth.iter().cloned());
    }
    write_file(&dir.join(GROUND_TRUTH_FILE), &formats::write_ground_truth(&bugs, spec_checksum))?;
    let _ = writeln!(
        out,
        "wrote {} training and {} held-out files with {} planted bugs to {}",
        train.files.len(),
        held.files.len(),
        bugs.len(),
        dir.display()
    );
    Ok(())
}

/// extract, embed, then gen, train and eval for each pattern.
pub fn pipeline(cfg: &RunConfig, patterns: &[Pattern], random: bool, out: &mut dyn Write) -> Result<()> {
    extract(cfg, out)?;
    embed(cfg, random, out)?;
    for &p in patterns {
        gen(cfg, p, out)?;
        train(cfg, p, random, out)?;
        eval(cfg, p, random, out)?;
    }
    Ok(())
}
