//! Loading source corpora.
//!
//! A corpus path is a directory of `.js` (and single-document `.json`)
//! files, a `.jsonl` manifest with one syntax tree per line, or a single
//! file. Files are identified by their path relative to the corpus root,
//! with `/` separators, and are always processed in id order.

use std::fs;
use std::path::Path;

use namebug_core::frontend::{parse, to_source, tokenize, Node};
use namebug_core::naming::embedding_token_stream;
use namebug_core::SourceFile;
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::estree;

/// A file that could not be read, parsed or ingested.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub files: Vec<SourceFile>,
    /// Embedding token stream of each file, parallel to `files`.
    pub streams: Vec<Vec<String>>,
    pub failures: Vec<Failure>,
}

impl Corpus {
    /// Number of inputs seen, successful or not.
    pub fn input_count(&self) -> usize {
        self.files.len() + self.failures.len()
    }
}

enum Input {
    Source { id: String, text: String },
    Tree { id: String, text: String },
    Broken(Failure),
}

fn id_of(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn read(id: String, path: &Path, tree: bool) -> Input {
    match fs::read_to_string(path) {
        Ok(text) if tree => Input::Tree { id, text },
        Ok(text) => Input::Source { id, text },
        Err(e) => Input::Broken(Failure { id, message: e.to_string() }),
    }
}

fn manifest(path: &Path) -> Result<Vec<Input>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fallback = format!("{name}:{}", i + 1);
        let id = serde_json::from_str::<serde_json::Value>(line)
            .ok()
            .and_then(|v| v.get("fileId").and_then(|f| f.as_str()).map(str::to_string))
            .unwrap_or(fallback);
        out.push(Input::Tree { id, text: line.to_string() });
    }
    Ok(out)
}

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e == ext)
}

fn gather(path: &Path) -> Result<Vec<Input>> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_file() {
        if has_ext(path, "jsonl") {
            return manifest(path);
        }
        let id = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        return Ok(vec![read(id, path, has_ext(path, "json"))]);
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(path).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::input(e.to_string()))?;
        let p = entry.path();
        if !entry.file_type().is_file() {
            continue;
        }
        if has_ext(p, "js") {
            out.push(read(id_of(path, p), p, false));
        } else if has_ext(p, "json") {
            out.push(read(id_of(path, p), p, true));
        }
    }
    Ok(out)
}

fn process(input: Input) -> std::result::Result<(SourceFile, Vec<String>), Failure> {
    let fail = |id: &str, message: String| Failure { id: id.to_string(), message };
    match input {
        Input::Broken(f) => Err(f),
        Input::Source { id, text } => {
            let tokens = tokenize(&text, &id).map_err(|e| fail(&id, e.to_string()))?;
            let program = parse(&text, &id).map_err(|e| fail(&id, e.to_string()))?;
            let stream = embedding_token_stream(&tokens);
            Ok((SourceFile { id, program }, stream))
        }
        Input::Tree { id, text } => {
            let program: Node = estree::ingest_str(&text).map_err(|e| fail(&id, e.to_string()))?;
            // External trees carry no token list; the printed form of the
            // tree stands in for it.
            let printed = to_source(&program);
            let tokens = tokenize(&printed, &id).map_err(|e| fail(&id, e.to_string()))?;
            Ok((SourceFile { id, program }, embedding_token_stream(&tokens)))
        }
    }
}

/// Loads every file under `path`. Per-file failures are collected, not
/// fatal; only an unreadable root is an error.
pub fn load(path: &Path) -> Result<Corpus> {
    let inputs = gather(path)?;
    let results: Vec<_> = inputs.into_par_iter().map(process).collect();
    let mut corpus = Corpus::default();
    let mut loaded = Vec::new();
    for r in results {
        match r {
            Ok(pair) => loaded.push(pair),
            Err(f) => corpus.failures.push(f),
        }
    }
    loaded.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    for w in loaded.windows(2) {
        if w[0].0.id == w[1].0.id {
            return Err(Error::input(format!("duplicate file id {:?}", w[0].0.id)));
        }
    }
    corpus.failures.sort_by(|a, b| a.id.cmp(&b.id));
    for (file, stream) in loaded {
        corpus.files.push(file);
        corpus.streams.push(stream);
    }
    Ok(corpus)
}
