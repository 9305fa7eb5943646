//! Lexer for the JavaScript subset.
//!
//! Whitespace and comments are dropped. Operators are matched by maximal
//! munch against a fixed table, so `<=` always wins over `<`. Regular
//! expression literals and template strings are outside the subset and fail
//! with a [`LexError`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::frontend::ast::{LiteralValue, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TokenKind {
    Identifier,
    NumberLiteral,
    StringLiteral,
    BooleanLiteral,
    NullLiteral,
    Keyword,
    Operator,
    Punctuation,
}

impl TokenKind {
    pub fn is_literal(self) -> bool {
        matches!(
            self,
            TokenKind::NumberLiteral
                | TokenKind::StringLiteral
                | TokenKind::BooleanLiteral
                | TokenKind::NullLiteral
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// The lexeme exactly as written, quotes included for strings.
    pub text: String,
    pub line: u32,
    pub column: u32,
}

impl Token {
    pub fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }

    /// Position one past the last character of the lexeme. Lexemes never
    /// span lines (strings cannot contain raw newlines).
    pub fn end(&self) -> Pos {
        Pos::new(self.line, self.column + self.text.chars().count() as u32)
    }

    /// Decoded literal value for literal tokens.
    pub fn literal_value(&self) -> Option<LiteralValue> {
        match self.kind {
            TokenKind::NumberLiteral => parse_number(&self.text).map(LiteralValue::Number),
            TokenKind::StringLiteral => decode_string(&self.text).map(LiteralValue::String),
            TokenKind::BooleanLiteral => Some(LiteralValue::Boolean(self.text == "true")),
            TokenKind::NullLiteral => Some(LiteralValue::Null),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{file}:{line}:{column}: {message}")]
pub struct LexError {
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

pub const KEYWORDS: &[&str] = &[
    "var", "let", "const", "function", "return", "if", "else", "for", "while", "this", "new",
    "typeof", "void", "delete", "instanceof", "in", "break", "continue", "do", "switch", "case",
    "default", "throw", "try", "catch", "finally", "class", "with",
];

// Longest first within each leading character so a linear scan is maximal munch.
const OPERATORS: &[&str] = &[
    ">>>=", "===", "!==", ">>>", "<<=", ">>=", "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "=", "<", ">", "+", "-", "*",
    "/", "%", "&", "|", "^", "!", "~", "?",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.', ':'];

pub fn tokenize(source: &str, file_id: &str) -> Result<Vec<Token>, LexError> {
    Lexer::new(source, file_id).run()
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    column: u32,
    file: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(source: &str, file: &'a str) -> Self {
        Lexer {
            chars: source.chars().collect(),
            pos: 0,
            line: 1,
            column: 0,
            file,
        }
    }

    fn peek(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> char {
        let c = self.chars[self.pos];
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 0;
        } else {
            self.column += 1;
        }
        c
    }

    fn error(&self, line: u32, column: u32, message: impl Into<String>) -> LexError {
        LexError {
            file: self.file.into(),
            line,
            column,
            message: message.into(),
        }
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let Some(c) = self.peek(0) else { break };
            let (line, column) = (self.line, self.column);
            let start = self.pos;
            let kind = if is_ident_start(c) {
                while self.peek(0).is_some_and(is_ident_part) {
                    self.bump();
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                match word.as_str() {
                    "true" | "false" => TokenKind::BooleanLiteral,
                    "null" => TokenKind::NullLiteral,
                    w if KEYWORDS.contains(&w) => TokenKind::Keyword,
                    _ => TokenKind::Identifier,
                }
            } else if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
                self.number(line, column)?;
                TokenKind::NumberLiteral
            } else if c == '"' || c == '\'' {
                self.string(c, line, column)?;
                TokenKind::StringLiteral
            } else if c == '`' {
                return Err(self.error(line, column, "template strings are not supported"));
            } else if PUNCTUATION.contains(&c) {
                self.bump();
                TokenKind::Punctuation
            } else if let Some(op) = self.operator() {
                for _ in 0..op.chars().count() {
                    self.bump();
                }
                TokenKind::Operator
            } else {
                return Err(self.error(line, column, alloc::format!("unexpected character {c:?}")));
            };
            out.push(Token {
                kind,
                text: self.chars[start..self.pos].iter().collect(),
                line,
                column,
            });
        }
        Ok(out)
    }

    fn operator(&self) -> Option<&'static str> {
        OPERATORS.iter().copied().find(|op| {
            op.chars()
                .enumerate()
                .all(|(i, oc)| self.peek(i) == Some(oc))
        })
    }

    fn skip_trivia(&mut self) -> Result<(), LexError> {
        loop {
            match (self.peek(0), self.peek(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while self.peek(0).is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let (line, column) = (self.line, self.column);
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(0), self.peek(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => return Err(self.error(line, column, "unterminated comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn number(&mut self, line: u32, column: u32) -> Result<(), LexError> {
        if self.peek(0) == Some('0') && matches!(self.peek(1), Some('x' | 'X')) {
            self.bump();
            self.bump();
            let digits = self.pos;
            while self.peek(0).is_some_and(|c| c.is_ascii_hexdigit()) {
                self.bump();
            }
            if self.pos == digits {
                return Err(self.error(line, column, "malformed hexadecimal literal"));
            }
        } else {
            while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
            if self.peek(0) == Some('.') {
                self.bump();
                while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
            if matches!(self.peek(0), Some('e' | 'E')) {
                self.bump();
                if matches!(self.peek(0), Some('+' | '-')) {
                    self.bump();
                }
                let digits = self.pos;
                while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
                if self.pos == digits {
                    return Err(self.error(line, column, "malformed exponent"));
                }
            }
        }
        if self.peek(0).is_some_and(is_ident_part) {
            return Err(self.error(self.line, self.column, "identifier directly after number"));
        }
        Ok(())
    }

    fn string(&mut self, quote: char, line: u32, column: u32) -> Result<(), LexError> {
        let start = self.pos;
        self.bump();
        loop {
            match self.peek(0) {
                None | Some('\n') => return Err(self.error(line, column, "unterminated string")),
                Some('\\') => {
                    self.bump();
                    if self.peek(0).is_none() {
                        return Err(self.error(line, column, "unterminated string"));
                    }
                    self.bump();
                }
                Some(c) => {
                    self.bump();
                    if c == quote {
                        break;
                    }
                }
            }
        }
        let lexeme: String = self.chars[start..self.pos].iter().collect();
        if decode_string(&lexeme).is_none() {
            return Err(self.error(line, column, "invalid escape sequence"));
        }
        Ok(())
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

pub fn parse_number(lexeme: &str) -> Option<f64> {
    if let Some(hex) = lexeme.strip_prefix("0x").or_else(|| lexeme.strip_prefix("0X")) {
        return u64::from_str_radix(hex, 16).ok().map(|v| v as f64);
    }
    lexeme.parse().ok()
}

/// Decodes a quoted string lexeme. Returns `None` on a bad escape.
pub fn decode_string(lexeme: &str) -> Option<String> {
    let mut chars = lexeme.chars();
    let quote = chars.next()?;
    let body = chars.as_str().strip_suffix(quote)?;
    let mut out = String::with_capacity(body.len());
    let mut it = body.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next()? {
            'n' => out.push('\n'),
            't' => out.push('\t'),
            'r' => out.push('\r'),
            'b' => out.push('\u{8}'),
            'f' => out.push('\u{c}'),
            'v' => out.push('\u{b}'),
            '0' => out.push('\0'),
            'u' => {
                let hex: String = it.by_ref().take(4).collect();
                if hex.len() != 4 {
                    return None;
                }
                out.push(char::from_u32(u32::from_str_radix(&hex, 16).ok()?)?);
            }
            'x' => {
                let hex: String = it.by_ref().take(2).collect();
                if hex.len() != 2 {
                    return None;
                }
                out.push(char::from_u32(u32::from_str_radix(&hex, 16).ok()?)?);
            }
            other => out.push(other),
        }
    }
    Some(out)
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn kinds_and_text(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src, "t.js")
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    fn tok(kind: TokenKind, text: &str) -> (TokenKind, String) {
        (kind, text.into())
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("", "t.js").unwrap().is_empty());
        assert!(tokenize("  // only a comment\n /* and another */ ", "t.js").unwrap().is_empty());
    }

    #[test]
    fn var_declaration() {
        use TokenKind::*;
        assert_eq!(
            kinds_and_text("var x = 23;"),
            vec![
                tok(Keyword, "var"),
                tok(Identifier, "x"),
                tok(Operator, "="),
                tok(NumberLiteral, "23"),
                tok(Punctuation, ";"),
            ]
        );
    }

    #[test]
    fn maximal_munch() {
        use TokenKind::*;
        assert_eq!(
            kinds_and_text("i <= length"),
            vec![tok(Identifier, "i"), tok(Operator, "<="), tok(Identifier, "length")]
        );
        assert_eq!(
            kinds_and_text("a>>>=b!==c"),
            vec![
                tok(Identifier, "a"),
                tok(Operator, ">>>="),
                tok(Identifier, "b"),
                tok(Operator, "!=="),
                tok(Identifier, "c"),
            ]
        );
    }

    #[test]
    fn positions_are_line_and_column() {
        let toks = tokenize("a\n  bb // c\n/* x\n*/ 'q'", "t.js").unwrap();
        let pos: Vec<_> = toks.iter().map(|t| (t.line, t.column)).collect();
        assert_eq!(pos, vec![(1, 0), (2, 2), (4, 3)]);
    }

    #[test]
    fn literals() {
        let toks = tokenize("0x10 .5 1e3 'a\\'b' \"c\" true null", "t.js").unwrap();
        let values: Vec<_> = toks.iter().map(|t| t.literal_value().unwrap()).collect();
        assert_eq!(
            values,
            vec![
                LiteralValue::Number(16.0),
                LiteralValue::Number(0.5),
                LiteralValue::Number(1000.0),
                LiteralValue::String("a'b".into()),
                LiteralValue::String("c".into()),
                LiteralValue::Boolean(true),
                LiteralValue::Null,
            ]
        );
    }

    #[test]
    fn lex_errors() {
        let err = tokenize("a = `tpl`;", "f.js").unwrap_err();
        assert_eq!((err.line, err.column), (1, 4));
        assert!(tokenize("'open", "f.js").is_err());
        assert!(tokenize("x # y", "f.js").is_err());
        assert!(tokenize("/* never closed", "f.js").is_err());
        assert!(tokenize("12abc", "f.js").is_err());
        assert!(tokenize("'\\u12'", "f.js").is_err());
    }

    #[test]
    fn this_is_a_keyword() {
        assert_eq!(kinds_and_text("this")[0].0, TokenKind::Keyword);
    }
}
