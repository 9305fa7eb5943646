//! Renders an AST back to subset source text.
//!
//! Output re-parses to a tree of the same shape. Operator operands that are
//! not primary expressions are always parenthesized, so the printer never
//! needs to reason about precedence. Positions that take a full expression
//! (initializers, arguments, elements) are printed bare. Opaque nodes have no concrete syntax; their
//! children are printed one after another, which is enough to tokenize them.

use alloc::string::String;
use core::fmt::Write;

use super::ast::{DeclKind, LiteralValue, MemberProperty, Node, NodeKind};

pub fn to_source(node: &Node) -> String {
    let mut out = String::new();
    match &node.kind {
        NodeKind::Program(body) => {
            for stmt in body {
                statement(stmt, &mut out);
                out.push('\n');
            }
        }
        _ if is_statement(node) => statement(node, &mut out),
        _ => expression(node, &mut out),
    }
    out
}

fn is_statement(node: &Node) -> bool {
    matches!(
        node.kind,
        NodeKind::FunctionDecl { .. }
            | NodeKind::Block(_)
            | NodeKind::VarDecl { .. }
            | NodeKind::ExprStmt(_)
            | NodeKind::If { .. }
            | NodeKind::For { .. }
            | NodeKind::While { .. }
            | NodeKind::Return(_)
    )
}

fn params(list: &[String], out: &mut String) {
    out.push('(');
    out.push_str(&list.join(", "));
    out.push_str(") ");
}

fn var_decl(kind: DeclKind, declarators: &[super::ast::Declarator], out: &mut String) {
    out.push_str(kind.as_str());
    out.push(' ');
    for (i, d) in declarators.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&d.name);
        if let Some(init) = &d.init {
            out.push_str(" = ");
            expression(init, out);
        }
    }
}

fn statement(node: &Node, out: &mut String) {
    match &node.kind {
        NodeKind::FunctionDecl { name, params: p, body } => {
            out.push_str("function ");
            out.push_str(name);
            params(p, out);
            statement(body, out);
        }
        NodeKind::Block(body) => {
            out.push('{');
            for stmt in body {
                out.push(' ');
                statement(stmt, out);
            }
            out.push_str(" }");
        }
        NodeKind::VarDecl { kind, declarators } => {
            var_decl(*kind, declarators, out);
            out.push(';');
        }
        NodeKind::ExprStmt(e) => {
            if starts_ambiguously(e) {
                out.push('(');
                expression(e, out);
                out.push(')');
            } else {
                expression(e, out);
            }
            out.push(';');
        }
        NodeKind::If { test, consequent, alternate } => {
            out.push_str("if (");
            expression(test, out);
            out.push_str(") ");
            statement(consequent, out);
            if let Some(alt) = alternate {
                out.push_str(" else ");
                statement(alt, out);
            }
        }
        NodeKind::For { init, test, update, body } => {
            out.push_str("for (");
            if let Some(init) = init {
                match &init.kind {
                    NodeKind::VarDecl { kind, declarators } => var_decl(*kind, declarators, out),
                    _ => expression(init, out),
                }
            }
            out.push(';');
            if let Some(test) = test {
                out.push(' ');
                expression(test, out);
            }
            out.push(';');
            if let Some(update) = update {
                out.push(' ');
                expression(update, out);
            }
            out.push_str(") ");
            statement(body, out);
        }
        NodeKind::While { test, body } => {
            out.push_str("while (");
            expression(test, out);
            out.push_str(") ");
            statement(body, out);
        }
        NodeKind::Return(value) => {
            out.push_str("return");
            if let Some(v) = value {
                out.push(' ');
                expression(v, out);
            }
            out.push(';');
        }
        NodeKind::Opaque { children, .. } => opaque(children, out),
        _ => {
            expression(node, out);
            out.push(';');
        }
    }
}

/// An expression statement may not start with `{` or `function`.
fn starts_ambiguously(node: &Node) -> bool {
    let mut n = node;
    loop {
        n = match &n.kind {
            NodeKind::Object(_) | NodeKind::FunctionExpr { .. } => return true,
            NodeKind::Call { callee, .. } => callee,
            NodeKind::Member { object, .. } => object,
            NodeKind::Binary { left, .. } | NodeKind::Logical { left, .. } => left,
            NodeKind::Assign { target, .. } => target,
            NodeKind::Conditional { test, .. } => test,
            NodeKind::Update { prefix: false, operand, .. } => operand,
            _ => return false,
        };
    }
}

fn is_primary(node: &Node) -> bool {
    matches!(
        node.kind,
        NodeKind::Identifier(_)
            | NodeKind::This
            | NodeKind::Literal(_)
            | NodeKind::Member { .. }
            | NodeKind::Call { .. }
            | NodeKind::Array(_)
            | NodeKind::Object(_)
    )
}

/// Prints `node`, parenthesized unless it is a primary expression.
fn operand(node: &Node, out: &mut String) {
    if is_primary(node) {
        expression(node, out);
    } else {
        out.push('(');
        expression(node, out);
        out.push(')');
    }
}

fn expression(node: &Node, out: &mut String) {
    match &node.kind {
        NodeKind::FunctionExpr { name, params: p, body } => {
            out.push_str("function");
            if let Some(n) = name {
                out.push(' ');
                out.push_str(n);
            }
            params(p, out);
            statement(body, out);
        }
        NodeKind::Assign { op, target, value } => {
            operand(target, out);
            let _ = write!(out, " {op} ");
            expression(value, out);
        }
        NodeKind::Call { callee, args } => {
            callee_or_base(callee, out);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expression(a, out);
            }
            out.push(')');
        }
        NodeKind::Member { object, property } => {
            callee_or_base(object, out);
            match property {
                MemberProperty::Named { name, .. } => {
                    out.push('.');
                    out.push_str(name);
                }
                MemberProperty::Computed(index) => {
                    out.push('[');
                    expression(index, out);
                    out.push(']');
                }
            }
        }
        NodeKind::Binary { op, left, right } | NodeKind::Logical { op, left, right } => {
            operand(left, out);
            let _ = write!(out, " {} ", op.symbol());
            operand(right, out);
        }
        NodeKind::Unary { op, operand: e } => {
            out.push_str(op);
            if op.chars().all(|c| c.is_ascii_alphabetic()) {
                out.push(' ');
            }
            operand(e, out);
        }
        NodeKind::Update { op, prefix, operand: e } => {
            if *prefix {
                out.push_str(op);
                operand(e, out);
            } else {
                operand(e, out);
                out.push_str(op);
            }
        }
        NodeKind::Conditional { test, consequent, alternate } => {
            operand(test, out);
            out.push_str(" ? ");
            expression(consequent, out);
            out.push_str(" : ");
            expression(alternate, out);
        }
        NodeKind::Identifier(name) => out.push_str(name),
        NodeKind::Literal(v) => literal(v, out),
        NodeKind::This => out.push_str("this"),
        NodeKind::Array(items) => {
            out.push('[');
            for (i, e) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expression(e, out);
            }
            out.push(']');
        }
        NodeKind::Object(props) => {
            out.push('{');
            for (i, p) in props.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push(' ');
                string_literal(&p.key, out);
                out.push_str(": ");
                expression(&p.value, out);
            }
            out.push_str(" }");
        }
        NodeKind::Opaque { children, .. } => opaque(children, out),
        _ => statement(node, out),
    }
}

/// Base of a member access or callee: number literals and non-primary
/// expressions need parentheses (`(1).x`, `(f || g)()`).
fn callee_or_base(node: &Node, out: &mut String) {
    let bare = is_primary(node) && !matches!(node.kind, NodeKind::Literal(LiteralValue::Number(_)));
    if bare {
        expression(node, out);
    } else {
        out.push('(');
        expression(node, out);
        out.push(')');
    }
}

fn opaque(children: &[Node], out: &mut String) {
    for (i, c) in children.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if is_statement(c) {
            statement(c, out);
        } else {
            expression(c, out);
        }
    }
}

fn literal(v: &LiteralValue, out: &mut String) {
    match v {
        LiteralValue::Number(n) if n.is_infinite() => out.push_str("1e999"),
        LiteralValue::Number(n) => {
            let _ = write!(out, "{n}");
        }
        LiteralValue::String(s) => string_literal(s, out),
        LiteralValue::Boolean(b) => {
            let _ = write!(out, "{b}");
        }
        LiteralValue::Null => out.push_str("null"),
    }
}

fn string_literal(s: &str, out: &mut String) {
    out.push('\'');
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c == '\u{2028}' || c == '\u{2029}' => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('\'');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ast::{clear_spans, same_shape};
    use crate::frontend::parse;

    fn round_trip(src: &str) {
        let a = parse(src, "a.js").unwrap();
        let printed = to_source(&a);
        let b = parse(&printed, "b.js").unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert!(same_shape(&a, &b), "{src}\n=> {printed}");
    }

    #[test]
    fn printed_source_reparses_to_the_same_tree() {
        for src in [
            "var x = 23;",
            "f(a, b);",
            "x.y[3];",
            "for (var i = 0; i !== len; ++i) { total += i; }",
            "for (;;) {}",
            "if (a < b) { c(); } else if (d) e(); else { }",
            "while (i--) { x = i % 2 === 0 ? 'even' : \"o'dd\\n\"; }",
            "function f(a, b) { return a * (b + 1) - -a; }",
            "(function () { return this.x; })();",
            "({ a: 1, 'b c': [1, 2, null, true] }).a;",
            "x = typeof y === 'string' && !(z instanceof Foo) || 'k' in obj;",
            "a = b = c;",
            "(1).toString(2);",
            "let s = '\\u0001\\t';",
            "(a || b)(c);",
            "x++ + ++y;",
            "f(a = b, function () {}, c ? d = 1 : e);",
            "var o = { k: a || b }, q = [x = 1, -y];",
        ] {
            round_trip(src);
        }
    }

    #[test]
    fn spans_are_ignored_by_shape_comparison() {
        let mut a = parse("f(a,b);", "a.js").unwrap();
        let mut b = parse(&to_source(&a), "b.js").unwrap();
        clear_spans(&mut a);
        clear_spans(&mut b);
        assert_eq!(a, b);
    }
}
