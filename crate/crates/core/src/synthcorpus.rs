//! Deterministic synthetic corpora with planted naming conventions and
//! planted bugs.
//!
//! Every site is rendered on its own line from a template. Identifiers of a
//! cluster are interchangeable: a file picks one training member per cluster
//! and uses it for all sites. Held-out files additionally render a fraction of
//! their sites with the cluster's holdout members, which never occur at sites
//! of training files. Holdout members still occur in training files inside
//! anchor statements (`var col = left;`) so that embeddings can place them
//! next to the other members of their cluster.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detector::Pattern;
use crate::frontend::{tokenize, BinaryOp, TokenKind};
use crate::hash::{mix64, Fnv64};
use crate::patterns::mutate_operator;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("template refers to undefined cluster {0:?}")]
    UndefinedCluster(String),
    #[error("cluster {0:?} has no members")]
    EmptyCluster(String),
    #[error("cluster {0:?} has no holdout members but the unseen-site rate is positive")]
    NoHoldout(String),
    #[error("duplicate cluster name {0:?}")]
    DuplicateCluster(String),
    #[error("{0:?} is not a plain identifier")]
    BadIdentifier(String),
    #[error("string operand {0:?} contains a quote, backslash or line break")]
    BadString(String),
    #[error("call template {0:?} needs at least two arguments")]
    TooFewArguments(String),
    #[error("call template {0:?} has interchangeable first and second arguments")]
    AmbiguousArguments(String),
    #[error("no templates")]
    NoTemplates,
    #[error("bug rate {0} is outside [0, 0.5]")]
    BadBugRate(f64),
    #[error("unseen-site rate {0} is outside [0, 1]")]
    BadUnseenRate(f64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameCluster {
    pub name: String,
    /// Members used at sites of training files.
    pub members: Vec<String>,
    /// Members used only at unseen sites of held-out files.
    pub holdout: Vec<String>,
    /// Identifiers assigned to members in anchor statements.
    pub anchors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Operand {
    Cluster(String),
    Ident(String),
    Number(u32),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallTemplate {
    pub base: Option<String>,
    pub callee: String,
    pub args: Vec<Operand>,
}

/// Statement shape around a binary-operation site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteContext {
    If,
    While,
    Var,
    Assign,
}

impl SiteContext {
    pub const ALL: [SiteContext; 4] = [SiteContext::If, SiteContext::While, SiteContext::Var, SiteContext::Assign];

    pub fn as_str(self) -> &'static str {
        match self {
            SiteContext::If => "if",
            SiteContext::While => "while",
            SiteContext::Var => "var",
            SiteContext::Assign => "assign",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinopTemplate {
    pub left: Operand,
    pub op: BinaryOp,
    pub right: Operand,
    pub context: SiteContext,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConventionSpec {
    pub clusters: Vec<NameCluster>,
    pub call_templates: Vec<CallTemplate>,
    pub binop_templates: Vec<BinopTemplate>,
    pub file_count: usize,
    pub sites_per_file: usize,
    pub anchors_per_file: usize,
    pub bug_rate: f64,
    /// Fraction of held-out sites rendered with holdout members.
    pub unseen_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Split {
    Train,
    HeldOut,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::HeldOut => "heldout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PlantedBug {
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub pattern: Pattern,
    pub violation: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthFile {
    pub id: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthCorpus {
    pub files: Vec<SynthFile>,
    pub ground_truth: Vec<PlantedBug>,
    /// Number of template sites emitted.
    pub site_count: usize,
}

fn id(s: &str) -> String {
    s.to_string()
}

fn cluster(name: &str) -> Operand {
    Operand::Cluster(id(name))
}

fn ident(name: &str) -> Operand {
    Operand::Ident(id(name))
}

impl ConventionSpec {
    /// Two four-member clusters of coordinate-like names (two training
    /// members and two holdout members each) plus a handful of fixed
    /// conventions.
    pub fn demo(seed: u64) -> Self {
        let strs = |v: &[&str]| v.iter().map(|s| id(s)).collect::<Vec<_>>();
        let clusters = alloc::vec![
            NameCluster {
                name: id("xs"),
                members: strs(&["x", "width"]),
                holdout: strs(&["x_dim", "col"]),
                anchors: strs(&["left", "right", "horizontal"]),
            },
            NameCluster {
                name: id("ys"),
                members: strs(&["y", "height"]),
                holdout: strs(&["y_dim", "row"]),
                anchors: strs(&["top", "bottom", "vertical"]),
            },
        ];
        let call = |base: Option<&str>, callee: &str, args: Vec<Operand>| CallTemplate {
            base: base.map(id),
            callee: id(callee),
            args,
        };
        let call_templates = alloc::vec![
            call(None, "setSize", alloc::vec![cluster("xs"), cluster("ys")]),
            call(Some("canvas"), "moveTo", alloc::vec![cluster("xs"), cluster("ys")]),
            call(None, "scroll", alloc::vec![cluster("ys"), cluster("xs")]),
            call(Some("ctx"), "fillRect", alloc::vec![cluster("xs"), cluster("ys"), ident("size"), ident("size")]),
            call(None, "done", alloc::vec![ident("err"), ident("result")]),
            call(None, "setTimeout", alloc::vec![ident("callback"), Operand::Number(100)]),
            call(Some("events"), "emit", alloc::vec![Operand::Str(id("change")), ident("value")]),
        ];
        let bin = |left: Operand, op: BinaryOp, right: Operand, context: SiteContext| BinopTemplate {
            left,
            op,
            right,
            context,
        };
        let binop_templates = alloc::vec![
            bin(cluster("xs"), BinaryOp::Lt, cluster("ys"), SiteContext::If),
            bin(cluster("ys"), BinaryOp::Div, cluster("xs"), SiteContext::Var),
            bin(cluster("xs"), BinaryOp::Mul, Operand::Number(2), SiteContext::Assign),
            bin(cluster("ys"), BinaryOp::Sub, ident("offset"), SiteContext::Assign),
            bin(ident("i"), BinaryOp::Rem, Operand::Number(2), SiteContext::If),
            bin(ident("count"), BinaryOp::Add, Operand::Number(1), SiteContext::Assign),
            bin(ident("name"), BinaryOp::StrictEq, Operand::Str(id("default")), SiteContext::If),
            bin(ident("index"), BinaryOp::Lt, ident("length"), SiteContext::While),
            bin(ident("bits"), BinaryOp::Shl, Operand::Number(3), SiteContext::Var),
        ];
        ConventionSpec {
            clusters,
            call_templates,
            binop_templates,
            file_count: 100,
            sites_per_file: 48,
            anchors_per_file: 32,
            bug_rate: 0.0,
            unseen_rate: 0.2,
            seed,
        }
    }

    fn cluster(&self, name: &str) -> Option<&NameCluster> {
        self.clusters.iter().find(|c| c.name == name)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !(0.0..=0.5).contains(&self.bug_rate) {
            return Err(SpecError::BadBugRate(self.bug_rate));
        }
        if !(0.0..=1.0).contains(&self.unseen_rate) {
            return Err(SpecError::BadUnseenRate(self.unseen_rate));
        }
        if self.call_templates.is_empty() && self.binop_templates.is_empty() {
            return Err(SpecError::NoTemplates);
        }
        let mut seen = BTreeSet::new();
        for c in &self.clusters {
            if !seen.insert(c.name.as_str()) {
                return Err(SpecError::DuplicateCluster(c.name.clone()));
            }
            if c.members.is_empty() || c.anchors.is_empty() {
                return Err(SpecError::EmptyCluster(c.name.clone()));
            }
            if c.holdout.is_empty() && self.unseen_rate > 0.0 {
                return Err(SpecError::NoHoldout(c.name.clone()));
            }
            for name in c.members.iter().chain(&c.holdout).chain(&c.anchors) {
                check_identifier(name)?;
            }
        }
        for t in &self.call_templates {
            if let Some(b) = &t.base {
                check_identifier(b)?;
            }
            check_identifier(&t.callee)?;
            if t.args.len() < 2 {
                return Err(SpecError::TooFewArguments(t.callee.clone()));
            }
            if t.args[0] == t.args[1] {
                return Err(SpecError::AmbiguousArguments(t.callee.clone()));
            }
            for a in &t.args {
                self.check_operand(a)?;
            }
        }
        for t in &self.binop_templates {
            self.check_operand(&t.left)?;
            self.check_operand(&t.right)?;
        }
        Ok(())
    }

    fn check_operand(&self, op: &Operand) -> Result<(), SpecError> {
        match op {
            Operand::Cluster(c) => self
                .cluster(c)
                .map(|_| ())
                .ok_or_else(|| SpecError::UndefinedCluster(c.clone())),
            Operand::Ident(s) => check_identifier(s),
            Operand::Number(_) => Ok(()),
            Operand::Str(s) => {
                if s.contains(['\'', '"', '\\', '\n', '\r']) {
                    Err(SpecError::BadString(s.clone()))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn checksum(&self) -> u64 {
        let mut h = Fnv64::new();
        let mut text = String::new();
        let _ = write!(text, "{self:?}");
        h.write_str(&text);
        h.finish()
    }
}

fn check_identifier(s: &str) -> Result<(), SpecError> {
    match tokenize(s, "") {
        Ok(tokens) if tokens.len() == 1 && tokens[0].kind == TokenKind::Identifier => Ok(()),
        _ => Err(SpecError::BadIdentifier(s.to_string())),
    }
}

/// Per-file choices: the active training member of each cluster.
struct FileState<'a> {
    spec: &'a ConventionSpec,
    active: Vec<&'a str>,
}

impl<'a> FileState<'a> {
    fn render(&self, op: &Operand, unseen: bool, rng: &mut ChaCha8Rng) -> String {
        match op {
            Operand::Cluster(name) => {
                let i = self.spec.clusters.iter().position(|c| &c.name == name).unwrap();
                if unseen {
                    self.spec.clusters[i].holdout.choose(rng).unwrap().clone()
                } else {
                    self.active[i].to_string()
                }
            }
            Operand::Ident(s) => s.clone(),
            Operand::Number(n) => alloc::format!("{n}"),
            Operand::Str(s) => alloc::format!("'{s}'"),
        }
    }
}

enum Site<'a> {
    Call(&'a CallTemplate),
    Binop(&'a BinopTemplate),
}

fn file_rng(spec: &ConventionSpec, split: Split, index: usize) -> ChaCha8Rng {
    let mut h = Fnv64::new();
    h.write_u64(spec.seed).write_str(split.as_str()).write_u64(index as u64);
    ChaCha8Rng::seed_from_u64(mix64(h.finish()))
}

/// Generates one split of the corpus described by `spec`.
pub fn generate(spec: &ConventionSpec, split: Split) -> Result<SynthCorpus, SpecError> {
    spec.validate()?;
    let sites: Vec<Site<'_>> = spec
        .call_templates
        .iter()
        .map(Site::Call)
        .chain(spec.binop_templates.iter().map(Site::Binop))
        .collect();
    // Every rendered binary operand, for operand-replacement bugs.
    let mut operand_universe: Vec<&Operand> = Vec::new();
    for t in &spec.binop_templates {
        for o in [&t.left, &t.right] {
            if !operand_universe.contains(&o) {
                operand_universe.push(o);
            }
        }
    }

    let mut files = Vec::with_capacity(spec.file_count);
    let mut ground_truth = Vec::new();
    let mut site_count = 0;
    for index in 0..spec.file_count {
        let mut rng = file_rng(spec, split, index);
        let file_id = alloc::format!("{}/{index:05}.js", split.as_str());
        let state = FileState {
            spec,
            active: spec
                .clusters
                .iter()
                .map(|c| c.members.choose(&mut rng).unwrap().as_str())
                .collect(),
        };
        let mut lines: Vec<String> = Vec::new();
        let anchor_lines: BTreeSet<usize> = {
            let total = spec.sites_per_file + spec.anchors_per_file;
            let mut slots: Vec<usize> = (0..total).collect();
            slots.shuffle(&mut rng);
            slots.into_iter().take(spec.anchors_per_file).collect()
        };
        let mut temp = 0usize;
        for slot in 0..spec.sites_per_file + spec.anchors_per_file {
            if anchor_lines.contains(&slot) {
                lines.push(anchor_statement(spec, &mut rng));
                continue;
            }
            site_count += 1;
            let line_no = lines.len() as u32 + 1;
            let unseen = split == Split::HeldOut && rng.gen_bool(spec.unseen_rate);
            let buggy = rng.gen_bool(spec.bug_rate);
            match sites.choose(&mut rng).unwrap() {
                Site::Call(t) => {
                    let mut args: Vec<String> = t.args.iter().map(|a| state.render(a, unseen, &mut rng)).collect();
                    if buggy && args[0] != args[1] {
                        args.swap(0, 1);
                        ground_truth.push(PlantedBug {
                            file: file_id.clone(),
                            line: line_no,
                            column: 0,
                            pattern: Pattern::SwappedArgs,
                            violation: "args-swapped",
                        });
                    }
                    let base = t.base.as_ref().map(|b| alloc::format!("{b}.")).unwrap_or_default();
                    lines.push(alloc::format!("{base}{}({});", t.callee, args.join(", ")));
                }
                Site::Binop(t) => {
                    let mut left = state.render(&t.left, unseen, &mut rng);
                    let mut right = state.render(&t.right, unseen, &mut rng);
                    let mut op = t.op;
                    if buggy {
                        let (pattern, violation) = if rng.gen_bool(0.5) {
                            op = mutate_operator(op, &mut rng);
                            (Pattern::WrongOperator, "op-replaced")
                        } else {
                            let replace_left = rng.gen_bool(0.5);
                            let candidates: Vec<String> = operand_universe
                                .iter()
                                .map(|o| state.render(o, unseen, &mut rng))
                                .filter(|r| *r != left && *r != right)
                                .collect();
                            let pick = candidates.choose(&mut rng).cloned();
                            match pick {
                                Some(r) => {
                                    if replace_left {
                                        left = r;
                                    } else {
                                        right = r;
                                    }
                                    (Pattern::WrongOperand, "operand-replaced")
                                }
                                None => {
                                    op = mutate_operator(op, &mut rng);
                                    (Pattern::WrongOperator, "op-replaced")
                                }
                            }
                        };
                        let (prefix, _) = context_text(t.context, temp);
                        ground_truth.push(PlantedBug {
                            file: file_id.clone(),
                            line: line_no,
                            column: prefix.chars().count() as u32,
                            pattern,
                            violation,
                        });
                    }
                    let (prefix, suffix) = context_text(t.context, temp);
                    temp += 1;
                    lines.push(alloc::format!("{prefix}{left} {} {right}{suffix}", op.symbol()));
                }
            }
        }
        let mut source = lines.join("\n");
        source.push('\n');
        files.push(SynthFile { id: file_id, source });
    }
    Ok(SynthCorpus {
        files,
        ground_truth,
        site_count,
    })
}

fn context_text(context: SiteContext, temp: usize) -> (String, String) {
    match context {
        SiteContext::If => ("if (".into(), ") { update(); }".into()),
        SiteContext::While => ("while (".into(), ") { advance(); }".into()),
        SiteContext::Var => (alloc::format!("var tmp{temp} = "), ";".into()),
        SiteContext::Assign => ("total = ".into(), ";".into()),
    }
}

fn anchor_statement(spec: &ConventionSpec, rng: &mut ChaCha8Rng) -> String {
    let c = spec.clusters.choose(rng).unwrap();
    let total = c.members.len() + c.holdout.len();
    let i = rng.gen_range(0..total);
    let member = c.members.get(i).unwrap_or_else(|| &c.holdout[i - c.members.len()]);
    let anchor = c.anchors.choose(rng).unwrap();
    if rng.gen_bool(0.5) {
        alloc::format!("var {member} = {anchor};")
    } else {
        alloc::format!("{member} = layout.{anchor};")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::extract_sites;
    use crate::frontend::parse;
    use crate::SourceFile;

    fn parsed(corpus: &SynthCorpus) -> Vec<SourceFile> {
        corpus
            .files
            .iter()
            .map(|f| SourceFile {
                id: f.id.clone(),
                program: parse(&f.source, &f.id).unwrap_or_else(|e| panic!("{}: {e}\n{}", f.id, f.source)),
            })
            .collect()
    }

    #[test]
    fn bug_free_corpus_follows_templates() {
        let spec = ConventionSpec::demo(1);
        let c = generate(&spec, Split::Train).unwrap();
        assert!(c.ground_truth.is_empty());
        assert_eq!(c.files.len(), 100);
        assert_eq!(c.site_count, 100 * 48);
        let files = parsed(&c);
        for f in &files {
            for site in extract_sites(Pattern::SwappedArgs, f) {
                let crate::detector::Example::Call(call) = site else { unreachable!() };
                let callee = call.callee.bare();
                let (a1, a2) = (call.arg1.bare(), call.arg2.bare());
                let xs = ["x", "width"];
                let ys = ["y", "height"];
                match callee {
                    "setSize" | "moveTo" | "fillRect" => assert!(xs.contains(&a1) && ys.contains(&a2)),
                    "scroll" => assert!(ys.contains(&a1) && xs.contains(&a2)),
                    "done" => assert_eq!((a1, a2), ("err", "result")),
                    "setTimeout" => assert_eq!((a1, a2), ("callback", "100")),
                    "emit" => assert_eq!((a1, a2), ("change", "value")),
                    other => panic!("unexpected callee {other}"),
                }
            }
            // Training sites never use holdout members.
            assert!(!f.id.is_empty());
        }
        for f in &c.files {
            for line in f.source.lines() {
                if line.starts_with("var ") && !line.starts_with("var tmp") || line.contains("layout.") {
                    continue;
                }
                for holdout in ["col", "row", "x_dim", "y_dim"] {
                    assert!(!line.contains(holdout), "{line}");
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let mut spec = ConventionSpec::demo(5);
        spec.bug_rate = 0.2;
        assert_eq!(generate(&spec, Split::HeldOut), generate(&spec, Split::HeldOut));
        assert_ne!(generate(&spec, Split::HeldOut), generate(&spec, Split::Train));
        spec.seed = 6;
        assert_ne!(generate(&spec, Split::HeldOut), generate(&ConventionSpec::demo(5), Split::HeldOut));
    }

    #[test]
    fn planted_bug_rate_is_binomial() {
        let mut spec = ConventionSpec::demo(9);
        spec.bug_rate = 0.1;
        spec.file_count = 10_000 / spec.sites_per_file + 1;
        let c = generate(&spec, Split::Train).unwrap();
        assert!(c.site_count >= 10_000);
        let rate = c.ground_truth.len() as f64 / c.site_count as f64;
        assert!((rate - 0.1).abs() <= 0.01, "{rate}");
    }

    #[test]
    fn planted_bugs_are_visible_to_extractors() {
        let mut spec = ConventionSpec::demo(3);
        spec.bug_rate = 0.3;
        spec.file_count = 40;
        for split in [Split::Train, Split::HeldOut] {
            let c = generate(&spec, split).unwrap();
            let files = parsed(&c);
            assert!(!c.ground_truth.is_empty());
            for bug in &c.ground_truth {
                let f = files.iter().find(|f| f.id == bug.file).unwrap();
                let found = extract_sites(bug.pattern, f)
                    .iter()
                    .any(|s| s.origin().line == bug.line && s.origin().column == bug.column);
                assert!(found, "{bug:?}");
            }
        }
    }

    #[test]
    fn held_out_files_use_holdout_members() {
        let spec = ConventionSpec::demo(2);
        let c = generate(&spec, Split::HeldOut).unwrap();
        let files = parsed(&c);
        let mut total = 0;
        let mut unseen = 0;
        for f in &files {
            for site in extract_sites(Pattern::SwappedArgs, f) {
                let crate::detector::Example::Call(call) = site else { unreachable!() };
                if ["setSize", "moveTo", "scroll", "fillRect"].contains(&call.callee.bare()) {
                    total += 1;
                    if ["col", "row", "x_dim", "y_dim"].contains(&call.arg1.bare()) {
                        unseen += 1;
                    }
                }
            }
        }
        let frac = unseen as f64 / total as f64;
        assert!((frac - 0.2).abs() < 0.05, "{frac}");
    }

    #[test]
    fn invalid_specs() {
        let mut spec = ConventionSpec::demo(1);
        spec.call_templates[0].args[0] = Operand::Cluster("zs".into());
        assert_eq!(generate(&spec, Split::Train), Err(SpecError::UndefinedCluster("zs".into())));
        let mut spec = ConventionSpec::demo(1);
        spec.bug_rate = 0.6;
        assert_eq!(spec.validate(), Err(SpecError::BadBugRate(0.6)));
        let mut spec = ConventionSpec::demo(1);
        spec.clusters[0].members[0] = "while".into();
        assert_eq!(spec.validate(), Err(SpecError::BadIdentifier("while".into())));
        let mut spec = ConventionSpec::demo(1);
        spec.call_templates[0].args.truncate(1);
        assert!(matches!(spec.validate(), Err(SpecError::TooFewArguments(_))));
        let mut spec = ConventionSpec::demo(1);
        spec.call_templates[0].args[1] = spec.call_templates[0].args[0].clone();
        assert!(matches!(spec.validate(), Err(SpecError::AmbiguousArguments(_))));
        let mut spec = ConventionSpec::demo(1);
        spec.binop_templates[0].right = Operand::Str("it's".into());
        assert!(matches!(spec.validate(), Err(SpecError::BadString(_))));
    }
}
