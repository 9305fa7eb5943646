//! Name extraction, the prefixed token stream used for embedding training,
//! and the frequency-capped vocabulary.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::frontend::{MemberProperty, Node, NodeKind, Token, TokenKind};
use crate::hash::Fnv64;

pub const ID_PREFIX: &str = "ID:";
pub const LIT_PREFIX: &str = "LIT:";
pub const UNK: &str = "UNK";
pub const NONE: &str = "NONE";
pub const UNK_INDEX: usize = 0;
pub const NONE_INDEX: usize = 1;

/// A name carrying exactly one of the `ID:` / `LIT:` prefixes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExtractedName(String);

impl ExtractedName {
    pub fn identifier(name: &str) -> Self {
        ExtractedName(alloc::format!("{ID_PREFIX}{name}"))
    }

    pub fn literal(value: &str) -> Self {
        ExtractedName(alloc::format!("{LIT_PREFIX}{value}"))
    }

    /// Accepts an already-prefixed string with a non-empty remainder.
    pub fn parse(text: &str) -> Option<Self> {
        let rest = text
            .strip_prefix(ID_PREFIX)
            .or_else(|| text.strip_prefix(LIT_PREFIX))?;
        (!rest.is_empty()).then(|| ExtractedName(text.into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_literal(&self) -> bool {
        self.0.starts_with(LIT_PREFIX)
    }

    /// The name or literal value without its prefix.
    pub fn bare(&self) -> &str {
        self.0
            .strip_prefix(ID_PREFIX)
            .or_else(|| self.0.strip_prefix(LIT_PREFIX))
            .unwrap_or(&self.0)
    }
}

impl fmt::Display for ExtractedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The name of an expression node, or `None` when no rule applies.
pub fn extract_name(node: &Node) -> Option<ExtractedName> {
    match &node.kind {
        NodeKind::Identifier(name) => Some(ExtractedName::identifier(name)),
        NodeKind::Literal(value) => Some(ExtractedName::literal(&value.to_string())),
        NodeKind::This => Some(ExtractedName::literal("this")),
        NodeKind::Update { operand, .. } => extract_name(operand),
        NodeKind::Member { object, property } => match property {
            MemberProperty::Named { name, .. } => Some(ExtractedName::identifier(name)),
            MemberProperty::Computed(_) => extract_name(object),
        },
        NodeKind::Call { callee, .. } => extract_name(callee),
        _ => None,
    }
    .filter(|n| !n.bare().is_empty())
}

/// Renders lexer output as embedding-training tokens: identifiers and
/// literals get their prefix, everything else stays raw. `this` is a
/// keyword token but renders as the literal `LIT:this`.
pub fn embedding_token_stream(tokens: &[Token]) -> Vec<String> {
    tokens
        .iter()
        .map(|t| match t.kind {
            TokenKind::Identifier => alloc::format!("{ID_PREFIX}{}", t.text),
            k if k.is_literal() => match t.literal_value() {
                Some(v) => alloc::format!("{LIT_PREFIX}{v}"),
                None => t.text.clone(),
            },
            TokenKind::Keyword if t.text == "this" => alloc::format!("{LIT_PREFIX}this"),
            _ => t.text.clone(),
        })
        .collect()
}

/// Whether a stream token is a prediction target for embedding training.
pub fn is_name_token(token: &str) -> bool {
    ExtractedName::parse(token).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabError {
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("vocabulary cap must be at least 2, got {0}")]
    CapTooSmall(usize),
    #[error("no coverage caps given")]
    NoCaps,
    #[error("malformed vocabulary: {0}")]
    Malformed(String),
}

/// Occurrence counts. Merging is associative and commutative, so counting
/// can be sharded per file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenCounts {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl TokenCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_streams<S: AsRef<str>>(streams: &[Vec<S>]) -> Self {
        let mut counts = Self::new();
        for s in streams {
            counts.add_stream(s);
        }
        counts
    }

    pub fn add_stream<S: AsRef<str>>(&mut self, stream: &[S]) {
        for tok in stream {
            *self.counts.entry(tok.as_ref().to_string()).or_default() += 1;
            self.total += 1;
        }
    }

    pub fn merge(&mut self, other: &TokenCounts) {
        for (tok, n) in &other.counts {
            *self.counts.entry(tok.clone()).or_default() += n;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Tokens by descending count, ties broken lexicographically.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut ranked: Vec<(&str, u64)> = self
            .counts
            .iter()
            .filter(|(t, _)| t.as_str() != UNK && t.as_str() != NONE)
            .map(|(t, &n)| (t.as_str(), n))
            .collect();
        // BTreeMap iteration is already lexicographic; a stable sort keeps it
        // as the tie-break.
        ranked.sort_by(|a, b| b.1.cmp(&a.1));
        ranked
    }
}

/// Frequency-capped token set. Index 0 is always `UNK`, index 1 `NONE`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<(String, u64)>,
    index: BTreeMap<String, usize>,
    cap: usize,
}

impl Vocabulary {
    /// Keeps the `cap - 2` most frequent tokens. The `UNK` entry records how
    /// many occurrences were discarded.
    pub fn from_counts(counts: &TokenCounts, cap: usize) -> Result<Self, VocabError> {
        if cap < 2 {
            return Err(VocabError::CapTooSmall(cap));
        }
        if counts.total() == 0 {
            return Err(VocabError::EmptyCorpus);
        }
        let ranked = counts.ranked();
        let kept = &ranked[..ranked.len().min(cap - 2)];
        let kept_total: u64 = kept.iter().map(|(_, n)| n).sum();
        let mut entries = Vec::with_capacity(kept.len() + 2);
        entries.push((UNK.to_string(), counts.total() - kept_total));
        entries.push((NONE.to_string(), 0));
        entries.extend(kept.iter().map(|(t, n)| (t.to_string(), *n)));
        Self::from_entries(entries, cap)
    }

    /// Rebuilds a vocabulary from stored entries (as read from a file).
    pub fn from_entries(entries: Vec<(String, u64)>, cap: usize) -> Result<Self, VocabError> {
        if entries.len() < 2 || entries[0].0 != UNK || entries[1].0 != NONE {
            return Err(VocabError::Malformed("entries 0 and 1 must be UNK and NONE".into()));
        }
        if entries.len() > cap.max(2) {
            return Err(VocabError::Malformed(alloc::format!(
                "{} entries exceed cap {cap}",
                entries.len()
            )));
        }
        let mut index = BTreeMap::new();
        for (i, (tok, _)) in entries.iter().enumerate() {
            if index.insert(tok.clone(), i).is_some() {
                return Err(VocabError::Malformed(alloc::format!("duplicate token {tok:?}")));
            }
        }
        Ok(Vocabulary {
            entries,
            index,
            cap,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.entries.get(index).map(|(t, _)| t.as_str())
    }

    /// Exact index of a token, if present.
    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of the token, or of `UNK` when absent.
    pub fn lookup(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK_INDEX)
    }

    pub fn is_reserved(index: usize) -> bool {
        index == UNK_INDEX || index == NONE_INDEX
    }

    pub fn checksum(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_u64(self.cap as u64);
        for (tok, n) in &self.entries {
            h.write_str(tok).write_u64(*n);
        }
        h.finish()
    }
}

pub fn build_vocabulary<S: AsRef<str>>(
    streams: &[Vec<S>],
    cap: usize,
) -> Result<Vocabulary, VocabError> {
    Vocabulary::from_counts(&TokenCounts::from_streams(streams), cap)
}

/// Fraction of all occurrences covered by a vocabulary of each cap (two
/// slots of every cap are taken by `UNK` and `NONE`).
pub fn coverage_curve(counts: &TokenCounts, caps: &[usize]) -> Result<Vec<(usize, f64)>, VocabError> {
    if caps.is_empty() {
        return Err(VocabError::NoCaps);
    }
    if counts.total() == 0 {
        return Err(VocabError::EmptyCorpus);
    }
    let ranked = counts.ranked();
    let mut prefix = Vec::with_capacity(ranked.len() + 1);
    prefix.push(0u64);
    for (_, n) in &ranked {
        prefix.push(prefix.last().unwrap() + n);
    }
    let total = counts.total() as f64;
    Ok(caps
        .iter()
        .map(|&cap| {
            let slots = cap.saturating_sub(2).min(ranked.len());
            (cap, prefix[slots] as f64 / total)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, tokenize};
    use alloc::vec;
    use proptest::prelude::*;

    fn expr_name(src: &str) -> Option<String> {
        let prog = parse(&alloc::format!("{src};"), "t.js").unwrap();
        let NodeKind::Program(body) = prog.kind else { unreachable!() };
        let NodeKind::ExprStmt(e) = &body[0].kind else { unreachable!() };
        extract_name(e).map(|n| n.as_str().to_string())
    }

    #[test]
    fn name_extraction_table() {
        let rows = [
            ("list", "ID:list"),
            ("23", "LIT:23"),
            ("this", "LIT:this"),
            ("i++", "ID:i"),
            ("myObject.prop", "ID:prop"),
            ("myArray[5]", "ID:myArray"),
            ("nextElement()", "ID:nextElement"),
            ("db.allNames()[3]", "ID:allNames"),
        ];
        for (src, want) in rows {
            assert_eq!(expr_name(src).as_deref(), Some(want), "{src}");
        }
    }

    #[test]
    fn unsupported_forms_have_no_name() {
        for src in ["a + b", "(function () {})", "!x", "[1, 2]", "({ a: 1 })", "(a = b)", "c ? d : e"] {
            assert_eq!(expr_name(src), None, "{src}");
        }
        assert_eq!(expr_name("'hi there'").as_deref(), Some("LIT:hi there"));
        assert_eq!(expr_name("0.50").as_deref(), Some("LIT:0.5"));
        assert_eq!(expr_name("--this.count").as_deref(), Some("ID:count"));
        assert_eq!(expr_name("f()()").as_deref(), Some("ID:f"));
        // Empty string literal has nothing after the prefix.
        assert_eq!(expr_name("''"), None);
    }

    #[test]
    fn token_stream_rendering() {
        let toks = tokenize("var x = 23;", "t.js").unwrap();
        assert_eq!(embedding_token_stream(&toks), vec!["var", "ID:x", "=", "LIT:23", ";"]);
        assert!(embedding_token_stream(&[]).is_empty());
        let toks = tokenize("this.msg", "t.js").unwrap();
        assert_eq!(embedding_token_stream(&toks), vec!["LIT:this", ".", "ID:msg"]);
        let toks = tokenize("f('a b', true, null, 0x1F)", "t.js").unwrap();
        assert_eq!(
            embedding_token_stream(&toks),
            vec!["ID:f", "(", "LIT:a b", ",", "LIT:true", ",", "LIT:null", ",", "LIT:31", ")"]
        );
    }

    #[test]
    fn vocabulary_cap_and_tie_break() {
        let v = build_vocabulary(&[vec!["a", "a", "b"]], 3).unwrap();
        assert_eq!(
            v.entries(),
            &[("UNK".into(), 1), ("NONE".into(), 0), ("a".into(), 2)]
        );
        assert_eq!(v.lookup("b"), UNK_INDEX);
        assert_eq!(v.lookup("a"), 2);

        let v = build_vocabulary(&[vec!["b", "a"]], 4).unwrap();
        assert_eq!(v.token(2), Some("a"));
        assert_eq!(v.token(3), Some("b"));

        assert_eq!(
            build_vocabulary::<&str>(&[vec![]], 4).unwrap_err(),
            VocabError::EmptyCorpus
        );
        assert_eq!(
            build_vocabulary(&[vec!["a"]], 1).unwrap_err(),
            VocabError::CapTooSmall(1)
        );
    }

    #[test]
    fn coverage_examples() {
        let c = TokenCounts::from_streams(&[vec!["a"]]);
        assert_eq!(coverage_curve(&c, &[3]).unwrap(), vec![(3, 1.0)]);
        let c = TokenCounts::from_streams(&[vec!["a", "a", "b", "c"]]);
        assert_eq!(coverage_curve(&c, &[3]).unwrap(), vec![(3, 0.5)]);
        assert_eq!(coverage_curve(&c, &[]).unwrap_err(), VocabError::NoCaps);
        assert_eq!(
            coverage_curve(&TokenCounts::new(), &[3]).unwrap_err(),
            VocabError::EmptyCorpus
        );
    }

    #[test]
    fn counts_merge_like_a_single_pass() {
        let a = vec!["x", "y", "x"];
        let b = vec!["y", "z"];
        let mut left = TokenCounts::from_streams(&[a.clone()]);
        left.merge(&TokenCounts::from_streams(&[b.clone()]));
        let mut right = TokenCounts::from_streams(&[b]);
        right.merge(&TokenCounts::from_streams(&[a]));
        assert_eq!(left, right);
        assert_eq!(left.total(), 5);
    }

    proptest! {
        #[test]
        fn coverage_is_monotone(
            streams in prop::collection::vec(prop::collection::vec("[a-f]{1,2}", 0..30), 1..5),
            mut caps in prop::collection::vec(0usize..50, 1..8),
        ) {
            let counts = TokenCounts::from_streams(&streams);
            prop_assume!(counts.total() > 0);
            caps.sort_unstable();
            let curve = coverage_curve(&counts, &caps).unwrap();
            for w in curve.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
            }
            for (_, f) in curve {
                prop_assert!((0.0..=1.0).contains(&f));
            }
        }

        #[test]
        fn vocabulary_keeps_most_frequent(
            stream in prop::collection::vec("[a-h]", 1..60),
            cap in 2usize..8,
        ) {
            let counts = TokenCounts::from_streams(&[stream.clone()]);
            let vocab = Vocabulary::from_counts(&counts, cap).unwrap();
            prop_assert!(vocab.len() <= cap);
            let min_kept = vocab.entries()[2..].iter().map(|e| e.1).min().unwrap_or(u64::MAX);
            for (tok, n) in counts.ranked() {
                if vocab.get(tok).is_none() {
                    prop_assert!(n <= min_kept);
                }
            }
            prop_assert_eq!(vocab.lookup("not-a-token"), UNK_INDEX);
        }

        #[test]
        fn prefixed_tokens_round_trip_to_ast_values(
            names in prop::collection::vec("[a-z][a-z0-9]{0,5}", 1..6),
            nums in prop::collection::vec(0u32..1000, 1..4),
        ) {
            let mut src = alloc::string::String::new();
            for (i, n) in names.iter().enumerate() {
                let num = nums[i % nums.len()];
                src.push_str(&alloc::format!("v_{n} = f_{n}(this.p{i}, {num}, 's{i}');\n"));
            }
            let toks = tokenize(&src, "p.js").unwrap();
            let prog = crate::frontend::parser::parse_tokens(&toks, "p.js").unwrap();
            let mut values = alloc::collections::BTreeSet::new();
            prog.walk(&mut |node, _| match &node.kind {
                NodeKind::Identifier(n) => { values.insert(n.clone()); }
                NodeKind::Literal(v) => { values.insert(v.to_string()); }
                NodeKind::This => { values.insert("this".into()); }
                NodeKind::Member { property: MemberProperty::Named { name, .. }, .. } => {
                    values.insert(name.clone());
                }
                _ => {}
            });
            for tok in embedding_token_stream(&toks) {
                if let Some(name) = ExtractedName::parse(&tok) {
                    prop_assert!(values.contains(name.bare()), "{} not in AST", tok);
                }
            }
        }
    }
}
