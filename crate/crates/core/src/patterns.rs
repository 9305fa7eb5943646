//! Training-data generators for the three bug patterns and their vector
//! representations.
//!
//! Each generator walks a parsed file, extracts positive examples (code as
//! written) and derives one negative per positive with a small mutation:
//!
//! * swapped arguments: exchange the first two call arguments;
//! * wrong operator: replace a binary operator by a different one;
//! * wrong operand: replace one operand by another operand of the same file.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embeddings::EmbeddingMatrix;
use crate::frontend::{BinaryOp, KindTag, LiteralType, Node, NodeKind};
use crate::hash::Fnv64;
use crate::naming::{extract_name, ExtractedName, Vocabulary, NONE};
use crate::SourceFile;

pub const TYPE_BITS: usize = 5;
pub const KIND_BITS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "pos",
            Label::Negative => "neg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pos" => Some(Label::Positive),
            "neg" => Some(Label::Negative),
            _ => None,
        }
    }

    /// Classifier target: positives are correct (0), negatives buggy (1).
    pub fn target(self) -> f64 {
        match self {
            Label::Positive => 0.0,
            Label::Negative => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Origin {
    pub file: String,
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

fn slot(name: &Option<ExtractedName>) -> String {
    name.as_ref().map_or_else(|| NONE.to_string(), |n| n.to_string())
}

fn type_slot(t: Option<LiteralType>) -> String {
    t.map_or_else(|| NONE.to_string(), |t| t.as_str().to_string())
}

fn parse_slot(s: &str) -> Result<Option<ExtractedName>, String> {
    if s == NONE {
        return Ok(None);
    }
    ExtractedName::parse(s)
        .map(Some)
        .ok_or_else(|| alloc::format!("not a name: {s:?}"))
}

fn parse_name(s: &str) -> Result<ExtractedName, String> {
    parse_slot(s)?.ok_or_else(|| "required name is NONE".to_string())
}

fn parse_type(s: &str) -> Result<Option<LiteralType>, String> {
    if s == NONE {
        return Ok(None);
    }
    LiteralType::parse(s)
        .map(Some)
        .ok_or_else(|| alloc::format!("not a literal type: {s:?}"))
}

/// `(base, callee, arg1, arg2, typeArg1, typeArg2, param1, param2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSiteExample {
    pub base: Option<ExtractedName>,
    pub callee: ExtractedName,
    pub arg1: ExtractedName,
    pub arg2: ExtractedName,
    pub type_arg1: Option<LiteralType>,
    pub type_arg2: Option<LiteralType>,
    pub param1: Option<ExtractedName>,
    pub param2: Option<ExtractedName>,
    pub label: Label,
    pub origin: Origin,
}

impl CallSiteExample {
    pub const FIELDS: usize = 8;

    pub fn tuple_strings(&self) -> [String; 8] {
        [
            slot(&self.base),
            self.callee.to_string(),
            self.arg1.to_string(),
            self.arg2.to_string(),
            type_slot(self.type_arg1),
            type_slot(self.type_arg2),
            slot(&self.param1),
            slot(&self.param2),
        ]
    }

    pub fn from_tuple_strings(fields: &[&str], label: Label, origin: Origin) -> Result<Self, String> {
        let [base, callee, arg1, arg2, t1, t2, p1, p2] = fields else {
            return Err(alloc::format!("expected 8 call-site fields, got {}", fields.len()));
        };
        Ok(CallSiteExample {
            base: parse_slot(base)?,
            callee: parse_name(callee)?,
            arg1: parse_name(arg1)?,
            arg2: parse_name(arg2)?,
            type_arg1: parse_type(t1)?,
            type_arg2: parse_type(t2)?,
            param1: parse_slot(p1)?,
            param2: parse_slot(p2)?,
            label,
            origin,
        })
    }

    /// The same call with its first two arguments exchanged.
    pub fn swapped(&self) -> Self {
        CallSiteExample {
            arg1: self.arg2.clone(),
            arg2: self.arg1.clone(),
            type_arg1: self.type_arg2,
            type_arg2: self.type_arg1,
            ..self.clone()
        }
    }

    pub fn same_tuple(&self, other: &Self) -> bool {
        self.tuple_strings() == other.tuple_strings()
    }

    /// Code-like rendering, e.g. `p.done(res, err)`.
    pub fn summary(&self) -> String {
        let base = self
            .base
            .as_ref()
            .map(|b| alloc::format!("{}.", b.bare()))
            .unwrap_or_default();
        alloc::format!(
            "{base}{}({}, {})",
            self.callee.bare(),
            self.arg1.bare(),
            self.arg2.bare()
        )
    }
}

/// `(left, right, op, typeLeft, typeRight, kindParent, kindGrandParent)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinOpExample {
    pub left: ExtractedName,
    pub right: ExtractedName,
    pub op: BinaryOp,
    pub type_left: Option<LiteralType>,
    pub type_right: Option<LiteralType>,
    pub kind_parent: KindTag,
    pub kind_grandparent: KindTag,
    pub label: Label,
    pub origin: Origin,
}

impl BinOpExample {
    pub const FIELDS: usize = 7;

    pub fn tuple_strings(&self) -> [String; 7] {
        [
            self.left.to_string(),
            self.right.to_string(),
            self.op.symbol().to_string(),
            type_slot(self.type_left),
            type_slot(self.type_right),
            self.kind_parent.as_str().to_string(),
            self.kind_grandparent.as_str().to_string(),
        ]
    }

    pub fn from_tuple_strings(fields: &[&str], label: Label, origin: Origin) -> Result<Self, String> {
        let [left, right, op, tl, tr, kp, kg] = fields else {
            return Err(alloc::format!("expected 7 binary-operation fields, got {}", fields.len()));
        };
        let kind = |s: &str| KindTag::parse(s).ok_or_else(|| alloc::format!("unknown node kind {s:?}"));
        Ok(BinOpExample {
            left: parse_name(left)?,
            right: parse_name(right)?,
            op: BinaryOp::from_symbol(op).ok_or_else(|| alloc::format!("unknown operator {op:?}"))?,
            type_left: parse_type(tl)?,
            type_right: parse_type(tr)?,
            kind_parent: kind(kp)?,
            kind_grandparent: kind(kg)?,
            label,
            origin,
        })
    }

    pub fn same_tuple(&self, other: &Self) -> bool {
        self.tuple_strings() == other.tuple_strings()
    }

    pub fn summary(&self) -> String {
        alloc::format!("{} {} {}", self.left.bare(), self.op, self.right.bare())
    }
}

fn literal_type(node: &Node) -> Option<LiteralType> {
    match &node.kind {
        NodeKind::Literal(v) => Some(v.literal_type()),
        _ => None,
    }
}

fn origin(file: &SourceFile, node: &Node) -> Origin {
    Origin {
        file: file.id.clone(),
        line: node.span.start.line,
        column: node.span.start.column,
    }
}

/// Formal parameters of same-file function declarations, first declaration
/// wins.
fn declared_params(program: &Node) -> alloc::collections::BTreeMap<String, Vec<String>> {
    let mut out = alloc::collections::BTreeMap::new();
    program.walk(&mut |node, _| {
        if let NodeKind::FunctionDecl { name, params, .. } = &node.kind {
            out.entry(name.clone()).or_insert_with(|| params.clone());
        }
    });
    out
}

/// Positive call-site examples: calls with at least two arguments whose
/// callee and first two arguments all have names, and whose swap would
/// actually change the tuple.
pub fn call_sites(file: &SourceFile) -> Vec<CallSiteExample> {
    let params = declared_params(&file.program);
    let mut out = Vec::new();
    file.program.walk(&mut |node, _| {
        let NodeKind::Call { callee, args } = &node.kind else { return };
        if args.len() < 2 {
            return;
        }
        let (Some(callee_name), Some(arg1), Some(arg2)) =
            (extract_name(callee), extract_name(&args[0]), extract_name(&args[1]))
        else {
            return;
        };
        let base = match &callee.kind {
            NodeKind::Member { object, .. } => extract_name(object),
            _ => None,
        };
        let (param1, param2) = match &callee.kind {
            NodeKind::Identifier(name) => match params.get(name) {
                Some(p) => (
                    p.first().map(|s| ExtractedName::identifier(s)),
                    p.get(1).map(|s| ExtractedName::identifier(s)),
                ),
                None => (None, None),
            },
            _ => (None, None),
        };
        let ex = CallSiteExample {
            base,
            callee: callee_name,
            arg1,
            arg2,
            type_arg1: literal_type(&args[0]),
            type_arg2: literal_type(&args[1]),
            param1,
            param2,
            label: Label::Positive,
            origin: origin(file, node),
        };
        if ex.arg1 != ex.arg2 || ex.type_arg1 != ex.type_arg2 {
            out.push(ex);
        }
    });
    out
}

/// Swapped-arguments generator. Deterministic; the seed is accepted for a
/// uniform generator signature but no randomness is involved.
pub fn gen_swapped_args(file: &SourceFile, _seed: u64) -> Vec<(CallSiteExample, CallSiteExample)> {
    call_sites(file)
        .into_iter()
        .map(|pos| {
            let mut neg = pos.swapped();
            neg.label = Label::Negative;
            (pos, neg)
        })
        .collect()
}

/// Positive binary-operation examples, in traversal order.
pub fn binop_sites(file: &SourceFile) -> Vec<BinOpExample> {
    let mut out = Vec::new();
    file.program.walk(&mut |node, ancestors| {
        let (NodeKind::Binary { op, left, right } | NodeKind::Logical { op, left, right }) = &node.kind
        else {
            return;
        };
        let (Some(l), Some(r)) = (extract_name(left), extract_name(right)) else { return };
        let n = ancestors.len();
        let kind_at = |i: Option<usize>| i.and_then(|i| ancestors.get(i)).map_or(KindTag::Program, |a| a.tag());
        out.push(BinOpExample {
            left: l,
            right: r,
            op: *op,
            type_left: literal_type(left),
            type_right: literal_type(right),
            kind_parent: kind_at(n.checked_sub(1)),
            kind_grandparent: kind_at(n.checked_sub(2)),
            label: Label::Positive,
            origin: origin(file, node),
        });
    });
    out
}

/// Uniform draw from the alphabet minus `op`.
pub fn mutate_operator(op: BinaryOp, rng: &mut impl Rng) -> BinaryOp {
    let mut i = rng.gen_range(0..BinaryOp::COUNT - 1);
    if i >= op.index() {
        i += 1;
    }
    BinaryOp::ALL[i]
}

pub fn gen_wrong_operator(file: &SourceFile, seed: u64) -> Vec<(BinOpExample, BinOpExample)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    binop_sites(file)
        .into_iter()
        .map(|pos| {
            let neg = BinOpExample {
                op: mutate_operator(pos.op, &mut rng),
                label: Label::Negative,
                ..pos.clone()
            };
            (pos, neg)
        })
        .collect()
}

/// Distinct `(name, type)` operands of all binary operations in the file,
/// in first-occurrence order.
pub fn operand_pool(file: &SourceFile) -> Vec<(ExtractedName, Option<LiteralType>)> {
    let mut seen = BTreeSet::new();
    let mut pool = Vec::new();
    file.program.walk(&mut |node, _| {
        if let NodeKind::Binary { left, right, .. } | NodeKind::Logical { left, right, .. } = &node.kind {
            for side in [left, right] {
                if let Some(name) = extract_name(side) {
                    let entry = (name, literal_type(side));
                    if seen.insert(entry.clone()) {
                        pool.push(entry);
                    }
                }
            }
        }
    });
    pool
}

/// Sites the wrong-operand generator can mutate: none when the file offers
/// fewer than two distinct operands.
pub fn operand_sites(file: &SourceFile) -> Vec<BinOpExample> {
    if operand_pool(file).len() < 2 {
        Vec::new()
    } else {
        binop_sites(file)
    }
}

pub fn gen_wrong_operand(file: &SourceFile, seed: u64) -> Vec<(BinOpExample, BinOpExample)> {
    let pool = operand_pool(file);
    if pool.len() < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for pos in binop_sites(file) {
        let replace_left = rng.gen_bool(0.5);
        let original = if replace_left {
            (&pos.left, pos.type_left)
        } else {
            (&pos.right, pos.type_right)
        };
        let candidates: Vec<_> = pool
            .iter()
            .filter(|(n, t)| !(n == original.0 && *t == original.1))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let (name, ty) = candidates[rng.gen_range(0..candidates.len())].clone();
        let mut neg = pos.clone();
        neg.label = Label::Negative;
        if replace_left {
            neg.left = name;
            neg.type_left = ty;
        } else {
            neg.right = name;
            neg.type_right = ty;
        }
        out.push((pos, neg));
    }
    out
}

/// Fixed random binary codes for literal types (`T`, 5 bits) and AST node
/// kinds (`K`, 8 bits). Codes are non-zero and pairwise distinct so they
/// never collide with each other or with the zero vector used for `NONE`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingTables {
    pub seed: u64,
    types: Vec<u8>,
    kinds: Vec<u8>,
}

impl EncodingTables {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |bits: usize, count: usize| {
            let mut used = BTreeSet::new();
            (0..count)
                .map(|_| loop {
                    let code = rng.gen_range(1u16..(1 << bits)) as u8;
                    if used.insert(code) {
                        break code;
                    }
                })
                .collect::<Vec<u8>>()
        };
        let types = draw(TYPE_BITS, LiteralType::ALL.len());
        let kinds = draw(KIND_BITS, KindTag::ALL.len());
        EncodingTables { seed, types, kinds }
    }

    /// Rebuilds tables from stored codes, validating them.
    pub fn from_codes(seed: u64, types: Vec<u8>, kinds: Vec<u8>) -> Result<Self, String> {
        if types.len() != LiteralType::ALL.len() || kinds.len() != KindTag::ALL.len() {
            return Err("wrong number of encoding codes".into());
        }
        if types.iter().any(|&c| c == 0 || c >= 1 << TYPE_BITS) || kinds.contains(&0) {
            return Err("encoding codes must be non-zero and fit their width".into());
        }
        Ok(EncodingTables { seed, types, kinds })
    }

    pub fn type_code(&self, t: LiteralType) -> u8 {
        self.types[LiteralType::ALL.iter().position(|x| *x == t).unwrap()]
    }

    pub fn kind_code(&self, k: KindTag) -> u8 {
        self.kinds[KindTag::ALL.iter().position(|x| *x == k).unwrap()]
    }

    pub fn type_codes(&self) -> &[u8] {
        &self.types
    }

    pub fn kind_codes(&self) -> &[u8] {
        &self.kinds
    }

    pub fn type_vector(&self, t: Option<LiteralType>, out: &mut Vec<f64>) {
        push_bits(t.map_or(0, |t| self.type_code(t)), TYPE_BITS, out);
    }

    pub fn kind_vector(&self, k: KindTag, out: &mut Vec<f64>) {
        push_bits(self.kind_code(k), KIND_BITS, out);
    }

    pub fn checksum(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_u64(self.seed).write(&self.types).write(&self.kinds);
        h.finish()
    }
}

fn push_bits(code: u8, width: usize, out: &mut Vec<f64>) {
    // Most significant bit first.
    for i in (0..width).rev() {
        out.push(f64::from((code >> i) & 1));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("embedding has {rows} rows but the vocabulary has {vocab} tokens")]
    RowMismatch { rows: usize, vocab: usize },
    #[error("embedding is bound to vocabulary {found:016x}, expected {expected:016x}")]
    VocabularyMismatch { expected: u64, found: u64 },
}

/// Vectorizes examples with one embedding, its vocabulary and the encoding
/// tables.
#[derive(Debug, Clone, Copy)]
pub struct Encoder<'a> {
    pub vocab: &'a Vocabulary,
    pub embedding: &'a EmbeddingMatrix,
    pub tables: &'a EncodingTables,
}

impl<'a> Encoder<'a> {
    pub fn new(
        vocab: &'a Vocabulary,
        embedding: &'a EmbeddingMatrix,
        tables: &'a EncodingTables,
    ) -> Result<Self, EncodeError> {
        if embedding.len() != vocab.len() {
            return Err(EncodeError::RowMismatch {
                rows: embedding.len(),
                vocab: vocab.len(),
            });
        }
        if embedding.vocab_checksum() != vocab.checksum() {
            return Err(EncodeError::VocabularyMismatch {
                expected: vocab.checksum(),
                found: embedding.vocab_checksum(),
            });
        }
        Ok(Encoder {
            vocab,
            embedding,
            tables,
        })
    }

    pub fn dim(&self) -> usize {
        self.embedding.dim()
    }

    pub fn call_len(&self) -> usize {
        call_vector_len(self.dim())
    }

    pub fn binop_len(&self) -> usize {
        binop_vector_len(self.dim())
    }

    fn push_name(&self, name: Option<&ExtractedName>, out: &mut Vec<f64>) {
        match name {
            Some(n) => out.extend_from_slice(self.embedding.row(self.vocab.lookup(n.as_str()))),
            None => out.extend(core::iter::repeat_n(0.0, self.dim())),
        }
    }

    /// `[E(base), E(callee), E(arg1), E(arg2), T(t1), T(t2), E(param1), E(param2)]`
    pub fn represent_call(&self, ex: &CallSiteExample) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.call_len());
        self.push_name(ex.base.as_ref(), &mut v);
        self.push_name(Some(&ex.callee), &mut v);
        self.push_name(Some(&ex.arg1), &mut v);
        self.push_name(Some(&ex.arg2), &mut v);
        self.tables.type_vector(ex.type_arg1, &mut v);
        self.tables.type_vector(ex.type_arg2, &mut v);
        self.push_name(ex.param1.as_ref(), &mut v);
        self.push_name(ex.param2.as_ref(), &mut v);
        v
    }

    /// `[E(left), E(right), onehot(op), T(tl), T(tr), K(parent), K(grandparent)]`
    pub fn represent_binop(&self, ex: &BinOpExample) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.binop_len());
        self.push_name(Some(&ex.left), &mut v);
        self.push_name(Some(&ex.right), &mut v);
        let at = v.len();
        v.extend(core::iter::repeat_n(0.0, BinaryOp::COUNT));
        v[at + ex.op.index()] = 1.0;
        self.tables.type_vector(ex.type_left, &mut v);
        self.tables.type_vector(ex.type_right, &mut v);
        self.tables.kind_vector(ex.kind_parent, &mut v);
        self.tables.kind_vector(ex.kind_grandparent, &mut v);
        v
    }
}

pub fn call_vector_len(dim: usize) -> usize {
    6 * dim + 2 * TYPE_BITS
}

pub fn binop_vector_len(dim: usize) -> usize {
    2 * dim + BinaryOp::COUNT + 2 * TYPE_BITS + 2 * KIND_BITS
}
