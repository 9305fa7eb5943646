//! Text forms of every stage output.
//!
//! All formats are line oriented and deterministic: the same value always
//! serializes to the same bytes. Reals are written either with nine
//! significant digits (`real9`) or, in headers, in Rust's shortest
//! round-trip form. Neither depends on the locale.

use std::fmt::Write as _;
use std::str::FromStr;

use namebug_core::detector::{DetectorConfig, DetectorModel, EvalReport, Example, Pattern, ThresholdRow, Warning};
use namebug_core::embeddings::EmbeddingMatrix;
use namebug_core::frontend::BinaryOp;
use namebug_core::naming::Vocabulary;
use namebug_core::neuralnet::{FitConfig, Mlp};
use namebug_core::patterns::{BinOpExample, CallSiteExample, EncodingTables, Label, Origin};
use namebug_core::synthcorpus::{
    BinopTemplate, CallTemplate, ConventionSpec, NameCluster, Operand, PlantedBug, SiteContext,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{escape, header_fields, header_value, hex, parse_hex, real9, unescape};

fn bad(what: &str, line: usize, message: impl std::fmt::Display) -> Error {
    Error::input(format!("{what}, line {}: {message}", line + 1))
}

/// `key=value` header line, with typed accessors.
struct Header<'a> {
    what: &'a str,
    fields: Vec<(&'a str, &'a str)>,
}

impl<'a> Header<'a> {
    fn new(what: &'a str, line: &'a str, tag: &str) -> Result<Self> {
        let rest = line
            .strip_prefix(tag)
            .ok_or_else(|| Error::input(format!("{what}: expected a header starting with {tag:?}")))?;
        Ok(Header { what, fields: header_fields(rest.trim_start()) })
    }

    fn str(&self, key: &str) -> Result<&'a str> {
        header_value(&self.fields, key)
            .ok_or_else(|| Error::input(format!("{}: header lacks {key}=", self.what)))
    }

    fn num<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.str(key)?;
        v.parse()
            .map_err(|_| Error::input(format!("{}: bad value {v:?} for {key}", self.what)))
    }

    fn hex(&self, key: &str) -> Result<u64> {
        let v = self.str(key)?;
        parse_hex(v).ok_or_else(|| Error::input(format!("{}: bad checksum {v:?} for {key}", self.what)))
    }
}

fn first_line<'a>(what: &str, text: &'a str) -> Result<(&'a str, std::iter::Enumerate<std::str::Lines<'a>>)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) => Ok((h, lines)),
        None => Err(Error::input(format!("{what}: empty file"))),
    }
}

pub fn check_checksum(what: &str, expected: u64, found: u64) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::input(format!(
            "{what} checksum mismatch: expected {}, found {}",
            hex(expected),
            hex(found)
        )))
    }
}

// ---------------------------------------------------------------------------
// Token streams

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenFile {
    pub config: u64,
    pub files: Vec<(String, Vec<String>)>,
}

/// `fileId<TAB>tok tok ...`, tokens escaped so they contain no spaces.
pub fn write_tokens(tokens: &TokenFile) -> String {
    let mut out = format!("# tokens config={} files={}\n", hex(tokens.config), tokens.files.len());
    for (id, stream) in &tokens.files {
        out.push_str(&escape(id));
        out.push('\t');
        let escaped: Vec<String> = stream.iter().map(|t| escape(t)).collect();
        out.push_str(&escaped.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_tokens(text: &str) -> Result<TokenFile> {
    const WHAT: &str = "token stream";
    let (h, lines) = first_line(WHAT, text)?;
    let header = Header::new(WHAT, h, "# tokens")?;
    let config = header.hex("config")?;
    let mut files = Vec::new();
    for (i, line) in lines {
        let (id, rest) = line.split_once('\t').ok_or_else(|| bad(WHAT, i, "missing tab"))?;
        let id = unescape(id).ok_or_else(|| bad(WHAT, i, "bad escape"))?;
        let stream = rest
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(|t| unescape(t).ok_or_else(|| bad(WHAT, i, "bad escape")))
            .collect::<Result<Vec<_>>>()?;
        files.push((id, stream));
    }
    if files.len() != header.num::<usize>("files")? {
        return Err(Error::input(format!("{WHAT}: file count does not match the header")));
    }
    Ok(TokenFile { config, files })
}

// ---------------------------------------------------------------------------
// Vocabulary

/// `index<TAB>token<TAB>count`; lines 0 and 1 are `UNK` and `NONE`.
pub fn write_vocab(vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for (i, (tok, n)) in vocab.entries().iter().enumerate() {
        let _ = writeln!(out, "{i}\t{}\t{n}", escape(tok));
    }
    out
}

/// The cap is not stored in the file; it comes from the run configuration.
pub fn read_vocab(text: &str, cap: usize) -> Result<Vocabulary> {
    const WHAT: &str = "vocabulary";
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut parts = line.split('\t');
        let (Some(idx), Some(tok), Some(n), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad(WHAT, i, "expected three tab-separated fields"));
        };
        if idx.parse::<usize>().ok() != Some(i) {
            return Err(bad(WHAT, i, format!("index {idx:?} out of sequence")));
        }
        let tok = unescape(tok).ok_or_else(|| bad(WHAT, i, "bad escape"))?;
        let n: u64 = n.parse().map_err(|_| bad(WHAT, i, "bad count"))?;
        entries.push((tok, n));
    }
    Ok(Vocabulary::from_entries(entries, cap)?)
}

// ---------------------------------------------------------------------------
// Embeddings

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    Cbow,
    Random,
}

impl EmbeddingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Cbow => "cbow",
            EmbeddingKind::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingHeader {
    pub dim: usize,
    pub vocab: u64,
    pub config: u64,
    pub kind: EmbeddingKind,
}

pub fn write_embedding(matrix: &EmbeddingMatrix, vocab: &Vocabulary, config: u64, kind: EmbeddingKind) -> String {
    let mut out = format!(
        "e={} vocab={} config={} kind={}\n",
        matrix.dim(),
        hex(matrix.vocab_checksum()),
        hex(config),
        kind.as_str()
    );
    for (i, (tok, _)) in vocab.entries().iter().enumerate() {
        out.push_str(&escape(tok));
        out.push('\t');
        let row: Vec<String> = matrix.row(i).iter().map(|&v| real9(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Reads an embedding and checks that it belongs to `vocab`.
pub fn read_embedding(text: &str, vocab: &Vocabulary) -> Result<(EmbeddingHeader, EmbeddingMatrix)> {
    const WHAT: &str = "embedding";
    let (h, lines) = first_line(WHAT, text)?;
    let header = Header::new(WHAT, h, "")?;
    let dim: usize = header.num("e")?;
    let vocab_ck = header.hex("vocab")?;
    let kind = match header.str("kind")? {
        "cbow" => EmbeddingKind::Cbow,
        "random" => EmbeddingKind::Random,
        other => return Err(Error::input(format!("{WHAT}: unknown kind {other:?}"))),
    };
    check_checksum("vocabulary", vocab.checksum(), vocab_ck).map_err(|e| e.context(WHAT))?;
    let mut data = Vec::with_capacity(vocab.len() * dim);
    let mut rows = 0;
    for (i, line) in lines {
        let (tok, values) = line.split_once('\t').ok_or_else(|| bad(WHAT, i, "missing tab"))?;
        let tok = unescape(tok).ok_or_else(|| bad(WHAT, i, "bad escape"))?;
        if vocab.token(rows) != Some(tok.as_str()) {
            return Err(bad(WHAT, i, format!("row {rows} is {tok:?}, not the vocabulary token")));
        }
        let before = data.len();
        for v in values.split(' ') {
            data.push(v.parse::<f64>().map_err(|_| bad(WHAT, i, format!("bad real {v:?}")))?);
        }
        if data.len() - before != dim {
            return Err(bad(WHAT, i, format!("expected {dim} values")));
        }
        rows += 1;
    }
    if rows != vocab.len() {
        return Err(Error::input(format!("{WHAT}: {rows} rows for {} vocabulary entries", vocab.len())));
    }
    let matrix = EmbeddingMatrix::from_rows(dim, data, vocab_ck)?;
    let header = EmbeddingHeader { dim, vocab: vocab_ck, config: header.hex("config")?, kind };
    Ok((header, matrix))
}

// ---------------------------------------------------------------------------
// Examples

#[derive(Debug, Clone, PartialEq)]
pub struct ExamplesFile {
    pub pattern: Pattern,
    pub vocab: u64,
    pub config: u64,
    pub pairs: Vec<(Example, Example)>,
}

fn write_example(out: &mut String, pattern: Pattern, e: &Example) {
    let o = e.origin();
    let _ = write!(out, "{}\t{}\t{}\t{}\t{}", pattern, e.label().as_str(), escape(&o.file), o.line, o.column);
    for f in e.tuple_strings() {
        out.push('\t');
        out.push_str(&escape(&f));
    }
    out.push('\n');
}

/// One record per line: pattern, label, file, line, column, then the
/// tuple fields. Each positive is followed by its negative.
pub fn write_examples(file: &ExamplesFile) -> String {
    let mut out = format!(
        "# examples pattern={} vocab={} config={} pairs={}\n",
        file.pattern,
        hex(file.vocab),
        hex(file.config),
        file.pairs.len()
    );
    for (p, n) in &file.pairs {
        write_example(&mut out, file.pattern, p);
        write_example(&mut out, file.pattern, n);
    }
    out
}

fn read_example(line: &str, i: usize, pattern: Pattern) -> Result<Example> {
    const WHAT: &str = "examples";
    let fields: Vec<String> = line
        .split('\t')
        .map(|f| unescape(f).ok_or_else(|| bad(WHAT, i, "bad escape")))
        .collect::<Result<_>>()?;
    if fields.len() < 5 {
        return Err(bad(WHAT, i, "too few fields"));
    }
    if fields[0] != pattern.as_str() {
        return Err(bad(WHAT, i, format!("pattern {:?} differs from the header", fields[0])));
    }
    let label = Label::parse(&fields[1]).ok_or_else(|| bad(WHAT, i, "bad label"))?;
    let origin = Origin {
        file: fields[2].clone(),
        line: fields[3].parse().map_err(|_| bad(WHAT, i, "bad line"))?,
        column: fields[4].parse().map_err(|_| bad(WHAT, i, "bad column"))?,
    };
    let tuple: Vec<&str> = fields[5..].iter().map(String::as_str).collect();
    let e = match pattern {
        Pattern::SwappedArgs => CallSiteExample::from_tuple_strings(&tuple, label, origin).map(Example::Call),
        Pattern::WrongOperator | Pattern::WrongOperand => {
            BinOpExample::from_tuple_strings(&tuple, label, origin).map(Example::BinOp)
        }
    };
    e.map_err(|m| bad(WHAT, i, m))
}

pub fn read_examples(text: &str) -> Result<ExamplesFile> {
    const WHAT: &str = "examples";
    let (h, mut lines) = first_line(WHAT, text)?;
    let header = Header::new(WHAT, h, "# examples")?;
    let pattern = Pattern::parse(header.str("pattern")?)
        .ok_or_else(|| Error::input(format!("{WHAT}: unknown pattern in header")))?;
    let mut pairs = Vec::new();
    while let Some((i, line)) = lines.next() {
        let p = read_example(line, i, pattern)?;
        let (j, line) = lines.next().ok_or_else(|| bad(WHAT, i, "positive without a negative"))?;
        let n = read_example(line, j, pattern)?;
        if p.label() != Label::Positive || n.label() != Label::Negative {
            return Err(bad(WHAT, i, "records must alternate pos and neg"));
        }
        pairs.push((p, n));
    }
    if pairs.len() != header.num::<usize>("pairs")? {
        return Err(Error::input(format!("{WHAT}: pair count does not match the header")));
    }
    Ok(ExamplesFile { pattern, vocab: header.hex("vocab")?, config: header.hex("config")?, pairs })
}

// ---------------------------------------------------------------------------
// Checkpoints

fn codes(c: &[u8]) -> String {
    c.iter().map(u8::to_string).collect::<Vec<_>>().join(",")
}

fn parse_codes(s: &str) -> Result<Vec<u8>> {
    s.split(',')
        .map(|c| c.parse().map_err(|_| Error::input(format!("checkpoint: bad code {c:?}"))))
        .collect()
}

fn reals(values: &[f64]) -> String {
    values.iter().map(|&v| real9(v)).collect::<Vec<_>>().join(" ")
}

/// Header lines followed by the parameters, one matrix row per line.
pub fn write_checkpoint(model: &DetectorModel, config: u64) -> String {
    let mlp = &model.mlp;
    let f = &model.config.fit;
    let mut out = String::from("# checkpoint\n");
    let _ = writeln!(
        out,
        "pattern={} input={} hidden={} dim={}",
        model.pattern,
        mlp.input_dim(),
        mlp.hidden_dim(),
        model.dim
    );
    let _ = writeln!(
        out,
        "config={} vocab={} embedding={} tables={}",
        hex(config),
        hex(model.vocab_checksum),
        hex(model.embedding_checksum),
        hex(model.tables.checksum())
    );
    let _ = writeln!(
        out,
        "epochs={} batch_size={} dropout={} learning_rate={} rho={} epsilon={} shuffle={}",
        f.epochs, f.batch_size, f.dropout, f.learning_rate, f.rho, f.epsilon, f.shuffle
    );
    let _ = writeln!(
        out,
        "fit_seed={} generator_seed={} init_seed={} tables_seed={}",
        f.seed, model.config.generator_seed, model.config.init_seed, model.tables.seed
    );
    let _ = writeln!(
        out,
        "type_codes={} kind_codes={}",
        codes(model.tables.type_codes()),
        codes(model.tables.kind_codes())
    );
    let _ = writeln!(out, "loss={}", model.loss_history.iter().map(|&v| real9(v)).collect::<Vec<_>>().join(","));
    out.push_str("W1\n");
    for row in mlp.w1().chunks(mlp.input_dim()) {
        out.push_str(&reals(row));
        out.push('\n');
    }
    let _ = writeln!(out, "b1\n{}\nW2\n{}\nb2\n{}", reals(mlp.b1()), reals(mlp.w2()), real9(mlp.b2()));
    out
}

pub fn read_checkpoint(text: &str) -> Result<(DetectorModel, u64)> {
    const WHAT: &str = "checkpoint";
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 8 || lines[0] != "# checkpoint" {
        return Err(Error::input(format!("{WHAT}: not a checkpoint file")));
    }
    let all: Vec<(&str, &str)> = lines[1..7].iter().flat_map(|l| header_fields(l)).collect();
    let h = Header { what: WHAT, fields: all };
    let pattern = Pattern::parse(h.str("pattern")?)
        .ok_or_else(|| Error::input(format!("{WHAT}: unknown pattern")))?;
    let input: usize = h.num("input")?;
    let hidden: usize = h.num("hidden")?;
    let dim: usize = h.num("dim")?;
    if input != pattern.vector_len(dim) {
        return Err(Error::input(format!("{WHAT}: input size {input} does not match e={dim}")));
    }
    let fit = FitConfig {
        epochs: h.num("epochs")?,
        batch_size: h.num("batch_size")?,
        dropout: h.num("dropout")?,
        learning_rate: h.num("learning_rate")?,
        rho: h.num("rho")?,
        epsilon: h.num("epsilon")?,
        seed: h.num("fit_seed")?,
        shuffle: h.num("shuffle")?,
    };
    let tables = EncodingTables::from_codes(
        h.num("tables_seed")?,
        parse_codes(h.str("type_codes")?)?,
        parse_codes(h.str("kind_codes")?)?,
    )
    .map_err(|m| Error::input(format!("{WHAT}: {m}")))?;
    check_checksum("encoding table", h.hex("tables")?, tables.checksum()).map_err(|e| e.context(WHAT))?;
    let loss_history = match h.str("loss")? {
        "" => Vec::new(),
        s => s
            .split(',')
            .map(|v| v.parse().map_err(|_| Error::input(format!("{WHAT}: bad loss value {v:?}"))))
            .collect::<Result<_>>()?,
    };

    let body = &lines[7..];
    let expect = |i: usize, tag: &str| -> Result<()> {
        if body.get(i) == Some(&tag) {
            Ok(())
        } else {
            Err(Error::input(format!("{WHAT}: expected {tag} section")))
        }
    };
    let parse_row = |i: usize, len: usize| -> Result<Vec<f64>> {
        let line = body.get(i).ok_or_else(|| Error::input(format!("{WHAT}: truncated")))?;
        let row = line
            .split(' ')
            .map(|v| v.parse::<f64>().map_err(|_| Error::input(format!("{WHAT}: bad real {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != len {
            return Err(Error::input(format!("{WHAT}: expected {len} values per row")));
        }
        Ok(row)
    };
    let mut theta = Vec::with_capacity(Mlp::param_count(input, hidden));
    expect(0, "W1")?;
    for r in 0..hidden {
        theta.extend(parse_row(1 + r, input)?);
    }
    let at = 1 + hidden;
    expect(at, "b1")?;
    theta.extend(parse_row(at + 1, hidden)?);
    expect(at + 2, "W2")?;
    theta.extend(parse_row(at + 3, hidden)?);
    expect(at + 4, "b2")?;
    theta.extend(parse_row(at + 5, 1)?);
    if body.len() != at + 6 {
        return Err(Error::input(format!("{WHAT}: trailing lines")));
    }
    let mlp = Mlp::from_parameters(input, hidden, theta).map_err(|e| Error::input(format!("{WHAT}: {e}")))?;
    let model = DetectorModel {
        pattern,
        mlp,
        dim,
        vocab_checksum: h.hex("vocab")?,
        embedding_checksum: h.hex("embedding")?,
        tables,
        config: DetectorConfig {
            hidden,
            fit,
            generator_seed: h.num("generator_seed")?,
            init_seed: h.num("init_seed")?,
        },
        loss_history,
    };
    Ok((model, h.hex("config")?))
}

// ---------------------------------------------------------------------------
// Warnings and evaluation reports

/// `probability<TAB>pattern<TAB>file<TAB>line<TAB>column<TAB>summary<TAB>fix`
pub fn write_warnings(warnings: &[Warning], pattern: Pattern, threshold: f64, config: u64) -> String {
    let mut out = format!(
        "# warnings pattern={pattern} threshold={threshold} config={} count={}\n",
        hex(config),
        warnings.len()
    );
    for w in warnings {
        let _ = writeln!(
            out,
            "{:.6}\t{}\t{}\t{}\t{}\t{}\t{}",
            w.probability,
            w.pattern,
            escape(&w.origin.file),
            w.origin.line,
            w.origin.column,
            escape(&w.summary),
            escape(w.suggested_fix.as_deref().unwrap_or(""))
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdJson {
    pub t: f64,
    pub recall: f64,
    pub fps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalJson {
    pub pattern: String,
    pub config: String,
    pub accuracy: f64,
    pub per_threshold: Vec<ThresholdJson>,
    pub count_pos: usize,
    pub count_neg: usize,
}

impl EvalJson {
    pub fn new(report: &EvalReport, pattern: Pattern, config: u64) -> Self {
        EvalJson {
            pattern: pattern.as_str().to_string(),
            config: hex(config),
            accuracy: report.accuracy,
            per_threshold: report
                .per_threshold
                .iter()
                .map(|r| ThresholdJson { t: r.threshold, recall: r.recall, fps: r.fps })
                .collect(),
            count_pos: report.count_pos,
            count_neg: report.count_neg,
        }
    }

    pub fn report(&self) -> EvalReport {
        EvalReport {
            accuracy: self.accuracy,
            per_threshold: self
                .per_threshold
                .iter()
                .map(|r| ThresholdRow { threshold: r.t, recall: r.recall, fps: r.fps })
                .collect(),
            count_pos: self.count_pos,
            count_neg: self.count_neg,
        }
    }
}

pub fn write_eval(report: &EvalReport, pattern: Pattern, config: u64) -> String {
    let mut s = serde_json::to_string_pretty(&EvalJson::new(report, pattern, config)).expect("serializable");
    s.push('\n');
    s
}

pub fn read_eval(text: &str) -> Result<EvalJson> {
    serde_json::from_str(text).map_err(|e| Error::input(format!("evaluation report: {e}")))
}

// ---------------------------------------------------------------------------
// Synthetic corpora

/// `fileId<TAB>line<TAB>column<TAB>pattern<TAB>violationKind`
pub fn write_ground_truth(bugs: &[PlantedBug], spec_checksum: u64) -> String {
    let mut out = format!("# ground-truth spec={} count={}\n", hex(spec_checksum), bugs.len());
    for b in bugs {
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", escape(&b.file), b.line, b.column, b.pattern, b.violation);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OperandToml {
    Cluster(String),
    Ident(String),
    Number(u32),
    String(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterToml {
    pub name: String,
    pub members: Vec<String>,
    #[serde(default)]
    pub holdout: Vec<String>,
    #[serde(default)]
    pub anchors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CallToml {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    pub callee: String,
    pub args: Vec<OperandToml>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinopToml {
    pub left: OperandToml,
    pub op: String,
    pub right: OperandToml,
    pub context: String,
}

/// Synthetic-corpus spec as written in TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpecToml {
    pub seed: u64,
    pub file_count: usize,
    pub heldout_file_count: usize,
    pub sites_per_file: usize,
    #[serde(default)]
    pub anchors_per_file: usize,
    #[serde(default)]
    pub bug_rate: f64,
    #[serde(default)]
    pub unseen_rate: f64,
    pub clusters: Vec<ClusterToml>,
    #[serde(default)]
    pub call_templates: Vec<CallToml>,
    #[serde(default)]
    pub binop_templates: Vec<BinopToml>,
}

fn operand_from(o: &OperandToml) -> Operand {
    match o {
        OperandToml::Cluster(s) => Operand::Cluster(s.clone()),
        OperandToml::Ident(s) => Operand::Ident(s.clone()),
        OperandToml::Number(n) => Operand::Number(*n),
        OperandToml::String(s) => Operand::Str(s.clone()),
    }
}

fn operand_to(o: &Operand) -> OperandToml {
    match o {
        Operand::Cluster(s) => OperandToml::Cluster(s.clone()),
        Operand::Ident(s) => OperandToml::Ident(s.clone()),
        Operand::Number(n) => OperandToml::Number(*n),
        Operand::Str(s) => OperandToml::String(s.clone()),
    }
}

impl SynthSpecToml {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::input(format!("synthetic corpus spec: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("serializable")
    }

    /// The training-split spec; held-out files use the same spec with
    /// `file_count = heldout_file_count`.
    pub fn convention_spec(&self) -> Result<ConventionSpec> {
        let binop_templates = self
            .binop_templates
            .iter()
            .map(|b| {
                Ok(BinopTemplate {
                    left: operand_from(&b.left),
                    op: BinaryOp::from_symbol(&b.op)
                        .ok_or_else(|| Error::input(format!("unknown operator {:?}", b.op)))?,
                    right: operand_from(&b.right),
                    context: SiteContext::parse(&b.context)
                        .ok_or_else(|| Error::input(format!("unknown site context {:?}", b.context)))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = ConventionSpec {
            clusters: self
                .clusters
                .iter()
                .map(|c| NameCluster {
                    name: c.name.clone(),
                    members: c.members.clone(),
                    holdout: c.holdout.clone(),
                    anchors: c.anchors.clone(),
                })
                .collect(),
            call_templates: self
                .call_templates
                .iter()
                .map(|c| CallTemplate {
                    base: c.base.clone(),
                    callee: c.callee.clone(),
                    args: c.args.iter().map(operand_from).collect(),
                })
                .collect(),
            binop_templates,
            file_count: self.file_count,
            sites_per_file: self.sites_per_file,
            anchors_per_file: self.anchors_per_file,
            bug_rate: self.bug_rate,
            unseen_rate: self.unseen_rate,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &ConventionSpec, heldout_file_count: usize) -> Self {
        SynthSpecToml {
            seed: spec.seed,
            file_count: spec.file_count,
            heldout_file_count,
            sites_per_file: spec.sites_per_file,
            anchors_per_file: spec.anchors_per_file,
            bug_rate: spec.bug_rate,
            unseen_rate: spec.unseen_rate,
            clusters: spec
                .clusters
                .iter()
                .map(|c| ClusterToml {
                    name: c.name.clone(),
                    members: c.members.clone(),
                    holdout: c.holdout.clone(),
                    anchors: c.anchors.clone(),
                })
                .collect(),
            call_templates: spec
                .call_templates
                .iter()
                .map(|c| CallToml {
                    base: c.base.clone(),
                    callee: c.callee.clone(),
                    args: c.args.iter().map(operand_to).collect(),
                })
                .collect(),
            binop_templates: spec
                .binop_templates
                .iter()
                .map(|b| BinopToml {
                    left: operand_to(&b.left),
                    op: b.op.symbol().to_string(),
                    right: operand_to(&b.right),
                    context: b.context.as_str().to_string(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use namebug_core::detector::{evaluate_predictions, generate_pairs, DEFAULT_THRESHOLDS};
    use namebug_core::embeddings::random_embedding;
    use namebug_core::frontend::parse;
    use namebug_core::naming::build_vocabulary;
    use namebug_core::SourceFile;

    fn vocab() -> Vocabulary {
        build_vocabulary(&[vec!["ID:a", "ID:a", "LIT:x y", "(", "ID:b"]], 10).unwrap()
    }

    #[test]
    fn tokens_round_trip() {
        let t = TokenFile {
            config: 42,
            files: vec![
                ("a b.js".into(), vec!["ID:x".into(), "LIT:two words".into(), "LIT:tab\t".into()]),
                ("empty.js".into(), vec![]),
            ],
        };
        let text = write_tokens(&t);
        assert!(text.lines().nth(1).unwrap().starts_with("a\\sb.js\tID:x LIT:two\\swords"));
        assert_eq!(read_tokens(&text).unwrap(), t);
        assert!(read_tokens("# tokens config=0000000000000000 files=2\nx\ty\n").is_err());
    }

    #[test]
    fn vocab_round_trip() {
        let v = vocab();
        let text = write_vocab(&v);
        assert!(text.starts_with("0\tUNK\t0\n1\tNONE\t0\n2\tID:a\t2\n"));
        assert_eq!(read_vocab(&text, 10).unwrap(), v);
        assert!(read_vocab("0\tNONE\t0\n1\tUNK\t0\n", 10).is_err());
        assert!(read_vocab("0\tUNK\t0\n2\tNONE\t0\n", 10).is_err());
    }

    #[test]
    fn embedding_round_trip_and_binding() {
        let v = vocab();
        let m = random_embedding(&v, 8, 1).unwrap();
        let text = write_embedding(&m, &v, 7, EmbeddingKind::Random);
        assert!(text.starts_with(&format!("e=8 vocab={} config=0000000000000007 kind=random\n", hex(v.checksum()))));
        let (h, back) = read_embedding(&text, &v).unwrap();
        assert_eq!(back, m);
        assert_eq!(h.kind, EmbeddingKind::Random);
        // A reloaded file is a fixed point.
        assert_eq!(write_embedding(&back, &v, 7, EmbeddingKind::Random), text);
        let other = build_vocabulary(&[vec!["ID:q"]], 10).unwrap();
        let err = read_embedding(&text, &other).unwrap_err();
        assert!(err.message.contains("checksum mismatch"));
    }

    #[test]
    fn examples_round_trip() {
        let files = vec![SourceFile {
            id: "f 1.js".into(),
            program: parse("p.done(res, 'a\\tb'); if (i % 2 === 0) { x = y - 1; }", "f 1.js").unwrap(),
        }];
        for pattern in Pattern::ALL {
            let pairs = generate_pairs(pattern, &files, 3);
            assert!(!pairs.is_empty());
            let f = ExamplesFile { pattern, vocab: 1, config: 2, pairs };
            let text = write_examples(&f);
            assert_eq!(read_examples(&text).unwrap(), f);
        }
    }

    #[test]
    fn warnings_and_eval_formats() {
        let w = Warning {
            origin: Origin { file: "a.js".into(), line: 3, column: 4 },
            pattern: Pattern::SwappedArgs,
            probability: 0.98765432,
            summary: "f(b, a)".into(),
            suggested_fix: Some("swap arguments: f(a, b)".into()),
        };
        let text = write_warnings(&[w], Pattern::SwappedArgs, 0.5, 1);
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "0.987654\tswapped-args\ta.js\t3\t4\tf(b,\\sa)\tswap\\sarguments:\\sf(a,\\sb)"
        );
        let report = evaluate_predictions(&[0.1, 0.7], &[0.9, 0.4], &DEFAULT_THRESHOLDS);
        let json = write_eval(&report, Pattern::WrongOperator, 5);
        assert!(json.contains("\"perThreshold\""));
        assert!(json.contains("\"countPos\": 2"));
        assert_eq!(read_eval(&json).unwrap().report(), report);
    }

    #[test]
    fn demo_spec_round_trips_through_toml() {
        let spec = ConventionSpec::demo(4);
        let t = SynthSpecToml::from_spec(&spec, 20);
        let text = t.to_toml();
        let back = SynthSpecToml::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.convention_spec().unwrap(), spec);
        assert!(SynthSpecToml::parse("seed = 1").is_err());
    }

    #[test]
    fn bundled_demo_spec_is_the_demo_convention() {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../demo/spec.toml")).unwrap();
        let t = SynthSpecToml::parse(&text).unwrap();
        let mut expected = ConventionSpec::demo(1);
        expected.file_count = 500;
        assert_eq!(t.convention_spec().unwrap(), expected);
        assert_eq!(t.heldout_file_count, 200);
    }

    #[test]
    fn checkpoint_round_trip() {
        use namebug_core::detector::train_on_pairs;
        use namebug_core::patterns::Encoder;
        let src = "f(a, b); g(c, d); h(e, f); k(x, y);";
        let files = vec![SourceFile { id: "c.js".into(), program: parse(src, "c.js").unwrap() }];
        let pairs = generate_pairs(Pattern::SwappedArgs, &files, 0);
        let streams = vec![namebug_core::naming::embedding_token_stream(
            &namebug_core::tokenize(src, "c.js").unwrap(),
        )];
        let v = build_vocabulary(&streams, 100).unwrap();
        let m = random_embedding(&v, 6, 2).unwrap();
        let tables = EncodingTables::new(5);
        let enc = Encoder::new(&v, &m, &tables).unwrap();
        let mut config = DetectorConfig { hidden: 3, ..DetectorConfig::default() };
        config.fit.batch_size = 2;
        config.fit.epochs = 2;
        let model = train_on_pairs(&pairs, Pattern::SwappedArgs, &enc, &config).unwrap();
        let text = write_checkpoint(&model, 77);
        let (back, ck) = read_checkpoint(&text).unwrap();
        assert_eq!(ck, 77);
        assert_eq!(write_checkpoint(&back, 77), text);
        assert_eq!(back.config, model.config);
        assert_eq!(back.tables, model.tables);
        for (a, b) in back.mlp.parameters().iter().zip(model.mlp.parameters()) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-300));
        }
        assert!(read_checkpoint(&text.replace("\nb2\n", "\nb3\n")).is_err());
        assert!(read_checkpoint(&text.replacen("hidden=3", "hidden=4", 1)).is_err());
    }
}
