//! Lexing and parsing of the JavaScript subset into a uniform AST.

pub mod ast;
pub mod lexer;
pub mod ops;
pub mod parser;
pub mod printer;

pub use ast::{KindTag, LiteralType, LiteralValue, MemberProperty, Node, NodeKind, Pos, Span};
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use ops::BinaryOp;
pub use parser::{parse, ParseError, SyntaxError};
pub use printer::to_source;
