//! Recursive-descent parser for the JavaScript subset.
//!
//! Semicolons are mandatory (no automatic insertion). Constructs that the
//! lexer recognises but the subset does not model (`new`, `break`,
//! `switch`, ...) are rejected with a [`ParseError`].

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::frontend::ast::{
    DeclKind, Declarator, MemberProperty, Node, NodeKind, Pos, Property, Span,
};
use crate::frontend::lexer::{tokenize, LexError, Token, TokenKind};
use crate::frontend::ops::BinaryOp;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{file}:{line}:{column}: expected {expected}, found {found}")]
pub struct ParseError {
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn position(&self) -> (u32, u32) {
        match self {
            SyntaxError::Lex(e) => (e.line, e.column),
            SyntaxError::Parse(e) => (e.line, e.column),
        }
    }
}

/// Tokenizes and parses a whole file into a `Program` node.
pub fn parse(source: &str, file_id: &str) -> Result<Node, SyntaxError> {
    let tokens = tokenize(source, file_id)?;
    Ok(parse_tokens(&tokens, file_id)?)
}

pub fn parse_tokens(tokens: &[Token], file_id: &str) -> Result<Node, ParseError> {
    let mut p = Parser {
        tokens,
        pos: 0,
        file: file_id,
        prev_end: Pos::new(1, 0),
    };
    let mut body = Vec::new();
    while !p.at_end() {
        body.push(p.statement()?);
    }
    let end = tokens.last().map(Token::end).unwrap_or(Pos::new(1, 0));
    Ok(Node::new(NodeKind::Program(body), Span::new(Pos::new(1, 0), end)))
}

const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=",
];

const UNARY_OPS: &[&str] = &["!", "-", "+", "~", "typeof", "void", "delete"];

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    file: &'t str,
    prev_end: Pos,
}

impl<'t> Parser<'t> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn start(&self) -> Pos {
        self.peek().map(Token::pos).unwrap_or(self.prev_end)
    }

    fn span_from(&self, start: Pos) -> Span {
        Span::new(start, self.prev_end)
    }

    fn advance(&mut self) -> &'t Token {
        let tok = &self.tokens[self.pos];
        self.pos += 1;
        self.prev_end = tok.end();
        tok
    }

    fn is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| {
            t.text == text
                && matches!(
                    t.kind,
                    TokenKind::Punctuation | TokenKind::Operator | TokenKind::Keyword
                )
        })
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.is(text) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        let (line, column, found) = match self.peek() {
            Some(t) => (t.line, t.column, format!("{:?}", t.text)),
            None => (self.prev_end.line, self.prev_end.column, "end of input".to_string()),
        };
        ParseError {
            file: self.file.into(),
            line,
            column,
            expected: expected.into(),
            found,
        }
    }

    fn expect(&mut self, text: &str) -> Result<(), ParseError> {
        if self.eat(text) {
            Ok(())
        } else {
            Err(self.error(format!("{text:?}")))
        }
    }

    fn identifier(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => Ok(self.advance().text.clone()),
            _ => Err(self.error("identifier")),
        }
    }

    fn statement(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let Some(tok) = self.peek() else {
            return Err(self.error("statement"));
        };
        if tok.kind == TokenKind::Keyword {
            match tok.text.as_str() {
                "var" | "let" | "const" => {
                    let decl = self.var_decl()?;
                    self.expect(";")?;
                    let mut decl = decl;
                    decl.span = self.span_from(start);
                    return Ok(decl);
                }
                "function" => return self.function_decl(),
                "if" => return self.if_stmt(),
                "for" => return self.for_stmt(),
                "while" => {
                    self.advance();
                    self.expect("(")?;
                    let test = self.expression()?;
                    self.expect(")")?;
                    let body = self.statement()?;
                    return Ok(Node::new(
                        NodeKind::While {
                            test: Box::new(test),
                            body: Box::new(body),
                        },
                        self.span_from(start),
                    ));
                }
                "return" => {
                    self.advance();
                    let arg = if self.is(";") {
                        None
                    } else {
                        Some(Box::new(self.expression()?))
                    };
                    self.expect(";")?;
                    return Ok(Node::new(NodeKind::Return(arg), self.span_from(start)));
                }
                "this" | "typeof" | "void" | "delete" => {}
                _ => return Err(self.error("statement of the supported subset")),
            }
        }
        if self.is("{") {
            return self.block();
        }
        let expr = self.expression()?;
        self.expect(";")?;
        Ok(Node::new(NodeKind::ExprStmt(Box::new(expr)), self.span_from(start)))
    }

    fn block(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        self.expect("{")?;
        let mut body = Vec::new();
        while !self.is("}") {
            if self.at_end() {
                return Err(self.error("\"}\""));
            }
            body.push(self.statement()?);
        }
        self.advance();
        Ok(Node::new(NodeKind::Block(body), self.span_from(start)))
    }

    /// Declaration without the trailing semicolon (shared with `for` heads).
    fn var_decl(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let kind = DeclKind::parse(&self.advance().text).expect("caller checked keyword");
        let mut declarators = Vec::new();
        loop {
            let dstart = self.start();
            let name = self.identifier()?;
            let init = if self.eat("=") {
                Some(self.assignment()?)
            } else {
                None
            };
            declarators.push(Declarator {
                name,
                span: self.span_from(dstart),
                init,
            });
            if !self.eat(",") {
                break;
            }
        }
        Ok(Node::new(
            NodeKind::VarDecl { kind, declarators },
            self.span_from(start),
        ))
    }

    fn params(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.eat(")") {
            loop {
                params.push(self.identifier()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(params)
    }

    fn function_decl(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        self.advance();
        let name = self.identifier()?;
        let params = self.params()?;
        let body = self.block()?;
        Ok(Node::new(
            NodeKind::FunctionDecl {
                name,
                params,
                body: Box::new(body),
            },
            self.span_from(start),
        ))
    }

    fn if_stmt(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        self.advance();
        self.expect("(")?;
        let test = self.expression()?;
        self.expect(")")?;
        let consequent = self.statement()?;
        let alternate = if self.eat("else") {
            Some(Box::new(self.statement()?))
        } else {
            None
        };
        Ok(Node::new(
            NodeKind::If {
                test: Box::new(test),
                consequent: Box::new(consequent),
                alternate,
            },
            self.span_from(start),
        ))
    }

    fn for_stmt(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        self.advance();
        self.expect("(")?;
        let init = if self.is(";") {
            None
        } else if self.is("var") || self.is("let") || self.is("const") {
            Some(Box::new(self.var_decl()?))
        } else {
            Some(Box::new(self.expression()?))
        };
        self.expect(";")?;
        let test = if self.is(";") {
            None
        } else {
            Some(Box::new(self.expression()?))
        };
        self.expect(";")?;
        let update = if self.is(")") {
            None
        } else {
            Some(Box::new(self.expression()?))
        };
        self.expect(")")?;
        let body = self.statement()?;
        Ok(Node::new(
            NodeKind::For {
                init,
                test,
                update,
                body: Box::new(body),
            },
            self.span_from(start),
        ))
    }

    fn expression(&mut self) -> Result<Node, ParseError> {
        self.assignment()
    }

    fn assignment(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let target = self.conditional()?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator && ASSIGN_OPS.contains(&t.text.as_str()) => {
                t.text.clone()
            }
            _ => return Ok(target),
        };
        if !matches!(target.kind, NodeKind::Identifier(_) | NodeKind::Member { .. }) {
            return Err(self.error("end of expression (invalid assignment target)"));
        }
        self.advance();
        let value = self.assignment()?;
        Ok(Node::new(
            NodeKind::Assign {
                op,
                target: Box::new(target),
                value: Box::new(value),
            },
            self.span_from(start),
        ))
    }

    fn conditional(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let test = self.binary(0)?;
        if !self.eat("?") {
            return Ok(test);
        }
        let consequent = self.assignment()?;
        self.expect(":")?;
        let alternate = self.assignment()?;
        Ok(Node::new(
            NodeKind::Conditional {
                test: Box::new(test),
                consequent: Box::new(consequent),
                alternate: Box::new(alternate),
            },
            self.span_from(start),
        ))
    }

    fn peek_binary_op(&self) -> Option<BinaryOp> {
        let t = self.peek()?;
        match t.kind {
            TokenKind::Operator | TokenKind::Keyword => BinaryOp::from_symbol(&t.text),
            _ => None,
        }
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> Result<Node, ParseError> {
        let start = self.start();
        let mut left = self.unary()?;
        while let Some(op) = self.peek_binary_op() {
            let prec = op.precedence();
            if prec <= min_prec {
                break;
            }
            self.advance();
            let right = self.binary(prec)?;
            let (left_box, right_box) = (Box::new(left), Box::new(right));
            let kind = if op.is_logical() {
                NodeKind::Logical {
                    op,
                    left: left_box,
                    right: right_box,
                }
            } else {
                NodeKind::Binary {
                    op,
                    left: left_box,
                    right: right_box,
                }
            };
            left = Node::new(kind, self.span_from(start));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        if let Some(t) = self.peek() {
            let is_op = matches!(t.kind, TokenKind::Operator | TokenKind::Keyword);
            if is_op && (t.text == "++" || t.text == "--") {
                let op = self.advance().text.clone();
                let operand = self.unary()?;
                return Ok(Node::new(
                    NodeKind::Update {
                        op,
                        prefix: true,
                        operand: Box::new(operand),
                    },
                    self.span_from(start),
                ));
            }
            if is_op && UNARY_OPS.contains(&t.text.as_str()) {
                let op = self.advance().text.clone();
                let operand = self.unary()?;
                return Ok(Node::new(
                    NodeKind::Unary {
                        op,
                        operand: Box::new(operand),
                    },
                    self.span_from(start),
                ));
            }
        }
        let expr = self.call_member()?;
        if self.is("++") || self.is("--") {
            let op = self.advance().text.clone();
            return Ok(Node::new(
                NodeKind::Update {
                    op,
                    prefix: false,
                    operand: Box::new(expr),
                },
                self.span_from(start),
            ));
        }
        Ok(expr)
    }

    fn call_member(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let mut expr = self.primary()?;
        loop {
            if self.eat(".") {
                let pstart = self.start();
                let name = match self.peek() {
                    Some(t)
                        if matches!(
                            t.kind,
                            TokenKind::Identifier
                                | TokenKind::Keyword
                                | TokenKind::BooleanLiteral
                                | TokenKind::NullLiteral
                        ) =>
                    {
                        self.advance().text.clone()
                    }
                    _ => return Err(self.error("property name")),
                };
                expr = Node::new(
                    NodeKind::Member {
                        object: Box::new(expr),
                        property: MemberProperty::Named {
                            name,
                            span: self.span_from(pstart),
                        },
                    },
                    self.span_from(start),
                );
            } else if self.eat("[") {
                let index = self.expression()?;
                self.expect("]")?;
                expr = Node::new(
                    NodeKind::Member {
                        object: Box::new(expr),
                        property: MemberProperty::Computed(Box::new(index)),
                    },
                    self.span_from(start),
                );
            } else if self.eat("(") {
                let mut args = Vec::new();
                if !self.eat(")") {
                    loop {
                        args.push(self.assignment()?);
                        if self.eat(")") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                expr = Node::new(
                    NodeKind::Call {
                        callee: Box::new(expr),
                        args,
                    },
                    self.span_from(start),
                );
            } else {
                return Ok(expr);
            }
        }
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let Some(tok) = self.peek() else {
            return Err(self.error("expression"));
        };
        let kind = match tok.kind {
            TokenKind::Identifier => NodeKind::Identifier(self.advance().text.clone()),
            k if k.is_literal() => {
                let value = tok.literal_value().ok_or_else(|| self.error("literal"))?;
                self.advance();
                NodeKind::Literal(value)
            }
            TokenKind::Keyword if tok.text == "this" => {
                self.advance();
                NodeKind::This
            }
            TokenKind::Keyword if tok.text == "function" => {
                self.advance();
                let name = match self.peek() {
                    Some(t) if t.kind == TokenKind::Identifier => Some(self.advance().text.clone()),
                    _ => None,
                };
                let params = self.params()?;
                let body = self.block()?;
                NodeKind::FunctionExpr {
                    name,
                    params,
                    body: Box::new(body),
                }
            }
            TokenKind::Punctuation if tok.text == "(" => {
                self.advance();
                let inner = self.expression()?;
                self.expect(")")?;
                // Parentheses do not produce a node; keep the inner span.
                return Ok(inner);
            }
            TokenKind::Punctuation if tok.text == "[" => {
                self.advance();
                let mut elements = Vec::new();
                if !self.eat("]") {
                    loop {
                        elements.push(self.assignment()?);
                        if self.eat("]") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                NodeKind::Array(elements)
            }
            TokenKind::Punctuation if tok.text == "{" => {
                self.advance();
                let mut props = Vec::new();
                if !self.eat("}") {
                    loop {
                        props.push(self.property()?);
                        if self.eat("}") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                NodeKind::Object(props)
            }
            _ => return Err(self.error("expression")),
        };
        Ok(Node::new(kind, self.span_from(start)))
    }

    fn property(&mut self) -> Result<Property, ParseError> {
        let start = self.start();
        let key = match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier || t.kind == TokenKind::Keyword => {
                self.advance().text.clone()
            }
            Some(t) if t.kind.is_literal() => {
                let v = t.literal_value().ok_or_else(|| self.error("property key"))?;
                self.advance();
                v.to_string()
            }
            _ => return Err(self.error("property key")),
        };
        self.expect(":")?;
        let value = self.assignment()?;
        Ok(Property {
            key,
            span: self.span_from(start),
            value,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ast::{same_shape, LiteralValue};
    use alloc::vec;

    fn sp() -> Span {
        Span::default()
    }

    fn ident(n: &str) -> Node {
        Node::new(NodeKind::Identifier(n.into()), sp())
    }

    fn lit(v: f64) -> Node {
        Node::new(NodeKind::Literal(LiteralValue::Number(v)), sp())
    }

    fn only_expr(src: &str) -> Node {
        let prog = parse(src, "t.js").unwrap();
        let NodeKind::Program(mut body) = prog.kind else { unreachable!() };
        assert_eq!(body.len(), 1);
        match body.remove(0).kind {
            NodeKind::ExprStmt(e) => *e,
            other => panic!("not an expression statement: {other:?}"),
        }
    }

    #[test]
    fn minimal_call() {
        let prog = parse("f(a, b);", "t.js").unwrap();
        let expected = Node::new(
            NodeKind::Program(vec![Node::new(
                NodeKind::ExprStmt(Box::new(Node::new(
                    NodeKind::Call {
                        callee: Box::new(ident("f")),
                        args: vec![ident("a"), ident("b")],
                    },
                    sp(),
                ))),
                sp(),
            )]),
            sp(),
        );
        assert!(same_shape(&prog, &expected));
    }

    #[test]
    fn nested_member_access() {
        let got = only_expr("x.y[3];");
        let expected = Node::new(
            NodeKind::Member {
                object: Box::new(Node::new(
                    NodeKind::Member {
                        object: Box::new(ident("x")),
                        property: MemberProperty::Named {
                            name: "y".into(),
                            span: sp(),
                        },
                    },
                    sp(),
                )),
                property: MemberProperty::Computed(Box::new(lit(3.0))),
            },
            sp(),
        );
        assert!(same_shape(&got, &expected));
    }

    #[test]
    fn for_loop_head() {
        let prog = parse("for (var i = 0; i !== len; ++i) {}", "t.js").unwrap();
        let NodeKind::Program(body) = &prog.kind else { unreachable!() };
        let NodeKind::For { init, test, update, body } = &body[0].kind else {
            panic!("expected For")
        };
        assert!(matches!(init.as_deref().unwrap().kind, NodeKind::VarDecl { .. }));
        let test = test.as_deref().unwrap();
        assert!(same_shape(
            test,
            &Node::new(
                NodeKind::Binary {
                    op: BinaryOp::StrictNotEq,
                    left: Box::new(ident("i")),
                    right: Box::new(ident("len")),
                },
                sp()
            )
        ));
        match &update.as_deref().unwrap().kind {
            NodeKind::Update { op, prefix, operand } => {
                assert_eq!(op, "++");
                assert!(*prefix);
                assert!(same_shape(operand, &ident("i")));
            }
            other => panic!("expected Update, got {other:?}"),
        }
        assert!(matches!(body.kind, NodeKind::Block(ref b) if b.is_empty()));
    }

    #[test]
    fn precedence_and_associativity() {
        let got = only_expr("a - b - c * d;");
        // (a - b) - (c * d)
        let NodeKind::Binary { op: BinaryOp::Sub, left, right } = got.kind else { panic!() };
        assert!(matches!(left.kind, NodeKind::Binary { op: BinaryOp::Sub, .. }));
        assert!(matches!(right.kind, NodeKind::Binary { op: BinaryOp::Mul, .. }));

        let got = only_expr("a || b && c | d;");
        let NodeKind::Logical { op: BinaryOp::Or, right, .. } = got.kind else { panic!() };
        let NodeKind::Logical { op: BinaryOp::And, right, .. } = right.kind else { panic!() };
        assert!(matches!(right.kind, NodeKind::Binary { op: BinaryOp::BitOr, .. }));

        let got = only_expr("x instanceof Foo;");
        assert!(matches!(got.kind, NodeKind::Binary { op: BinaryOp::InstanceOf, .. }));
    }

    #[test]
    fn table_one_shapes_parse() {
        for src in [
            "browserSingleton.startPoller(100, function(delay, fn) { setTimeout(delay, fn); });",
            "for (var i = 0; i < this.NR_OF_MULTIDELAYS; i++) { if (i % 2 == 0) { x = 1; } }",
            "if (typeof params[key] === 'object') { v = params[key]; } else { v = 2 % i == 0; }",
            "var a = { width: 1, 'height': x.y }, b = [1, 2, 3], c = cond ? a : b;",
            "function draw(x, y) { return x - y; }",
            "while (n > 0) { n -= 1; }",
            "obj.count++; --this.size; !done;",
        ] {
            parse(src, "t.js").unwrap_or_else(|e| panic!("{src}: {e}"));
        }
    }

    #[test]
    fn rejects_outside_subset() {
        for src in ["new Foo();", "x = 1", "break;", "f(a,);", "1 = 2;", "a.;", "if (x) {"] {
            assert!(parse(src, "t.js").is_err(), "{src} should not parse");
        }
        let err = parse("f(a b);", "t.js").unwrap_err();
        match err {
            SyntaxError::Parse(p) => {
                assert_eq!((p.line, p.column), (1, 4));
                assert_eq!(p.found, "\"b\"");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spans_nest() {
        let prog = parse(
            "function f(a, b) {\n  if (a <= b) { return g(a.x, b[1]); }\n}\nf(1, 2);",
            "t.js",
        )
        .unwrap();
        prog.walk(&mut |node, ancestors| {
            if let Some(parent) = ancestors.last() {
                assert!(parent.span.contains(&node.span), "{node:?} outside {parent:?}");
            }
        });
    }
}
