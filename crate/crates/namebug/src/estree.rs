//! ESTree-style JSON syntax trees.
//!
//! `export` writes the subset AST in ESTree shape; `ingest` reads trees from
//! external parsers. Node types outside the subset, and subset types used
//! with features the subset lacks (regex literals, `**`, destructuring, ...),
//! become `Opaque` nodes whose node-valued fields are kept as children.
//!
//! Locations are written as `{"line", "column", "end": {"line", "column"}}`.
//! Ingestion also accepts the `{"start": .., "end": ..}` form, and a missing
//! end position is widened to cover the node's children.

use namebug_core::frontend::ast::{DeclKind, Declarator, Property};
use namebug_core::frontend::{lexer, BinaryOp, LiteralValue, MemberProperty, Node, NodeKind, Pos, Span};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

fn schema(path: &str, message: impl Into<String>) -> SchemaError {
    SchemaError {
        path: path.to_string(),
        message: message.into(),
    }
}

fn loc(span: &Span) -> Value {
    json!({
        "line": span.start.line,
        "column": span.start.column,
        "end": { "line": span.end.line, "column": span.end.column },
    })
}

fn ident(name: &str) -> Value {
    json!({ "type": "Identifier", "name": name })
}

fn with_loc(mut v: Value, span: &Span) -> Value {
    v["loc"] = loc(span);
    v
}

fn opt(node: &Option<Box<Node>>) -> Value {
    node.as_deref().map_or(Value::Null, export)
}

fn list(nodes: &[Node]) -> Value {
    Value::Array(nodes.iter().map(export).collect())
}

fn declarators(kind: DeclKind, decls: &[Declarator]) -> Value {
    let decls: Vec<Value> = decls
        .iter()
        .map(|d| {
            with_loc(
                json!({
                    "type": "VariableDeclarator",
                    "id": ident(&d.name),
                    "init": d.init.as_ref().map_or(Value::Null, export),
                }),
                &d.span,
            )
        })
        .collect();
    json!({ "type": "VariableDeclaration", "kind": kind.as_str(), "declarations": decls })
}

/// Serializes a node (and its subtree) to ESTree-shaped JSON.
pub fn export(node: &Node) -> Value {
    let v = match &node.kind {
        NodeKind::Program(body) => json!({ "type": "Program", "body": list(body) }),
        NodeKind::FunctionDecl { name, params, body } => json!({
            "type": "FunctionDeclaration",
            "id": ident(name),
            "params": params.iter().map(|p| ident(p)).collect::<Vec<_>>(),
            "body": export(body),
        }),
        NodeKind::FunctionExpr { name, params, body } => json!({
            "type": "FunctionExpression",
            "id": name.as_deref().map_or(Value::Null, ident),
            "params": params.iter().map(|p| ident(p)).collect::<Vec<_>>(),
            "body": export(body),
        }),
        NodeKind::Block(body) => json!({ "type": "BlockStatement", "body": list(body) }),
        NodeKind::VarDecl { kind, declarators: d } => declarators(*kind, d),
        NodeKind::ExprStmt(e) => json!({ "type": "ExpressionStatement", "expression": export(e) }),
        NodeKind::If { test, consequent, alternate } => json!({
            "type": "IfStatement",
            "test": export(test),
            "consequent": export(consequent),
            "alternate": opt(alternate),
        }),
        NodeKind::For { init, test, update, body } => json!({
            "type": "ForStatement",
            "init": opt(init),
            "test": opt(test),
            "update": opt(update),
            "body": export(body),
        }),
        NodeKind::While { test, body } => json!({
            "type": "WhileStatement",
            "test": export(test),
            "body": export(body),
        }),
        NodeKind::Return(arg) => json!({ "type": "ReturnStatement", "argument": opt(arg) }),
        NodeKind::Assign { op, target, value } => json!({
            "type": "AssignmentExpression",
            "operator": op,
            "left": export(target),
            "right": export(value),
        }),
        NodeKind::Call { callee, args } => json!({
            "type": "CallExpression",
            "callee": export(callee),
            "arguments": list(args),
        }),
        NodeKind::Member { object, property } => match property {
            MemberProperty::Named { name, span } => json!({
                "type": "MemberExpression",
                "object": export(object),
                "property": with_loc(ident(name), span),
                "computed": false,
            }),
            MemberProperty::Computed(index) => json!({
                "type": "MemberExpression",
                "object": export(object),
                "property": export(index),
                "computed": true,
            }),
        },
        NodeKind::Binary { op, left, right } => json!({
            "type": "BinaryExpression",
            "operator": op.symbol(),
            "left": export(left),
            "right": export(right),
        }),
        NodeKind::Logical { op, left, right } => json!({
            "type": "LogicalExpression",
            "operator": op.symbol(),
            "left": export(left),
            "right": export(right),
        }),
        NodeKind::Unary { op, operand } => json!({
            "type": "UnaryExpression",
            "operator": op,
            "prefix": true,
            "argument": export(operand),
        }),
        NodeKind::Update { op, prefix, operand } => json!({
            "type": "UpdateExpression",
            "operator": op,
            "prefix": prefix,
            "argument": export(operand),
        }),
        NodeKind::Conditional { test, consequent, alternate } => json!({
            "type": "ConditionalExpression",
            "test": export(test),
            "consequent": export(consequent),
            "alternate": export(alternate),
        }),
        NodeKind::Identifier(name) => ident(name),
        NodeKind::Literal(value) => literal(value),
        NodeKind::This => json!({ "type": "ThisExpression" }),
        NodeKind::Array(items) => json!({ "type": "ArrayExpression", "elements": list(items) }),
        NodeKind::Object(props) => json!({
            "type": "ObjectExpression",
            "properties": props.iter().map(property).collect::<Vec<_>>(),
        }),
        NodeKind::Opaque { type_name, children } => json!({
            "type": type_name,
            "opaque": true,
            "children": list(children),
        }),
    };
    with_loc(v, &node.span)
}

fn literal(value: &LiteralValue) -> Value {
    match value {
        LiteralValue::Number(n) if !n.is_finite() => json!({ "type": "Literal", "value": null, "raw": "1e999" }),
        LiteralValue::Number(n) => json!({ "type": "Literal", "value": n }),
        LiteralValue::String(s) => json!({ "type": "Literal", "value": s }),
        LiteralValue::Boolean(b) => json!({ "type": "Literal", "value": b }),
        LiteralValue::Null => json!({ "type": "Literal", "value": null, "raw": "null" }),
    }
}

fn property(p: &Property) -> Value {
    with_loc(
        json!({
            "type": "Property",
            "kind": "init",
            "computed": false,
            "key": with_loc(json!({ "type": "Literal", "value": p.key }), &p.span),
            "value": export(&p.value),
        }),
        &p.span,
    )
}

// ---------------------------------------------------------------------------
// Ingestion

type Obj = Map<String, Value>;

fn as_obj<'a>(v: &'a Value, path: &str) -> Result<&'a Obj, SchemaError> {
    v.as_object().ok_or_else(|| schema(path, "expected an object"))
}

fn field<'a>(obj: &'a Obj, name: &str, path: &str) -> Result<&'a Value, SchemaError> {
    obj.get(name)
        .ok_or_else(|| schema(path, format!("missing field \"{name}\"")))
}

fn str_field<'a>(obj: &'a Obj, name: &str, path: &str) -> Result<&'a str, SchemaError> {
    field(obj, name, path)?
        .as_str()
        .ok_or_else(|| schema(&format!("{path}.{name}"), "expected a string"))
}

fn bool_field(obj: &Obj, name: &str, path: &str) -> Result<bool, SchemaError> {
    field(obj, name, path)?
        .as_bool()
        .ok_or_else(|| schema(&format!("{path}.{name}"), "expected a boolean"))
}

fn type_of<'a>(v: &'a Value, path: &str) -> Result<&'a str, SchemaError> {
    str_field(as_obj(v, path)?, "type", path)
}

fn line_col(v: &Value, path: &str) -> Result<Pos, SchemaError> {
    let obj = as_obj(v, path)?;
    let num = |name: &str| -> Result<u32, SchemaError> {
        field(obj, name, path)?
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| schema(&format!("{path}.{name}"), "expected a non-negative integer"))
    };
    Ok(Pos::new(num("line")?, num("column")?))
}

/// Start position and, when present, end position.
fn read_loc(obj: &Obj, path: &str) -> Result<(Pos, Option<Pos>), SchemaError> {
    let path = format!("{path}.loc");
    let l = field(obj, "loc", &path)?;
    let lo = as_obj(l, &path)?;
    if let Some(start) = lo.get("start") {
        let s = line_col(start, &format!("{path}.start"))?;
        let e = match lo.get("end") {
            Some(end) => Some(line_col(end, &format!("{path}.end"))?),
            None => None,
        };
        return Ok((s, e));
    }
    let s = line_col(l, &path)?;
    let e = match lo.get("end") {
        Some(end) => Some(line_col(end, &format!("{path}.end"))?),
        None => None,
    };
    Ok((s, e))
}

fn is_node(v: &Value) -> bool {
    v.as_object()
        .is_some_and(|o| o.get("type").is_some_and(Value::is_string))
}

struct Ingest;

enum Shape {
    Kind(NodeKind),
    /// Recognized type used with an unsupported feature.
    Unsupported,
}

use Shape::{Kind, Unsupported};

fn name_of(v: &Value, path: &str) -> Result<Option<String>, SchemaError> {
    if type_of(v, path)? != "Identifier" {
        return Ok(None);
    }
    Ok(Some(str_field(as_obj(v, path)?, "name", path)?.to_string()))
}

fn names_of(list: &[Value], path: &str) -> Result<Option<Vec<String>>, SchemaError> {
    let mut out = Vec::with_capacity(list.len());
    for (i, v) in list.iter().enumerate() {
        match name_of(v, &format!("{path}[{i}]"))? {
            Some(n) => out.push(n),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

fn array_field<'a>(obj: &'a Obj, name: &str, path: &str) -> Result<&'a Vec<Value>, SchemaError> {
    field(obj, name, path)?
        .as_array()
        .ok_or_else(|| schema(&format!("{path}.{name}"), "expected an array"))
}

impl Ingest {
    fn node(&self, v: &Value, path: &str) -> Result<Node, SchemaError> {
        let obj = as_obj(v, path)?;
        let ty = str_field(obj, "type", path)?;
        let (start, end) = read_loc(obj, path)?;
        let shape = if obj.get("opaque").and_then(Value::as_bool) == Some(true) {
            Unsupported
        } else {
            self.known(ty, obj, path)?
        };
        let kind = match shape {
            Kind(k) => k,
            Unsupported => NodeKind::Opaque {
                type_name: ty.to_string(),
                children: self.generic_children(obj, path)?,
            },
        };
        let mut node = Node::new(kind, Span::new(start, start));
        node.span.end = match end {
            Some(e) => e,
            None => node
                .children()
                .iter()
                .map(|c| c.span.end)
                .fold(start, core::cmp::max),
        };
        Ok(node)
    }

    fn child(&self, obj: &Obj, name: &str, path: &str) -> Result<Box<Node>, SchemaError> {
        let v = field(obj, name, path)?;
        Ok(Box::new(self.node(v, &format!("{path}.{name}"))?))
    }

    fn opt_child(&self, obj: &Obj, name: &str, path: &str) -> Result<Option<Box<Node>>, SchemaError> {
        match obj.get(name) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => Ok(Some(Box::new(self.node(v, &format!("{path}.{name}"))?))),
        }
    }

    fn children(&self, obj: &Obj, name: &str, path: &str) -> Result<Option<Vec<Node>>, SchemaError> {
        let items = array_field(obj, name, path)?;
        let mut out = Vec::with_capacity(items.len());
        for (i, v) in items.iter().enumerate() {
            if v.is_null() {
                return Ok(None);
            }
            out.push(self.node(v, &format!("{path}.{name}[{i}]"))?);
        }
        Ok(Some(out))
    }

    /// Every node-valued field, in source order.
    fn generic_children(&self, obj: &Obj, path: &str) -> Result<Vec<Node>, SchemaError> {
        let mut out = Vec::new();
        for (key, v) in obj {
            if key == "loc" || key == "type" {
                continue;
            }
            if is_node(v) {
                out.push(self.node(v, &format!("{path}.{key}"))?);
            } else if let Some(items) = v.as_array() {
                for (i, item) in items.iter().enumerate() {
                    if is_node(item) {
                        out.push(self.node(item, &format!("{path}.{key}[{i}]"))?);
                    }
                }
            }
        }
        out.sort_by_key(|n| n.span.start);
        Ok(out)
    }

    fn function(&self, obj: &Obj, path: &str) -> Result<Option<(Vec<String>, Box<Node>)>, SchemaError> {
        let Some(params) = names_of(array_field(obj, "params", path)?, &format!("{path}.params"))? else {
            return Ok(None);
        };
        let body = self.child(obj, "body", path)?;
        if !matches!(body.kind, NodeKind::Block(_)) {
            return Ok(None);
        }
        Ok(Some((params, body)))
    }

    fn binary(&self, obj: &Obj, path: &str, logical: bool) -> Result<Shape, SchemaError> {
        let symbol = str_field(obj, "operator", path)?;
        let Some(op) = BinaryOp::from_symbol(symbol) else {
            return Ok(Unsupported);
        };
        if op.is_logical() != logical {
            return Ok(Unsupported);
        }
        let left = self.child(obj, "left", path)?;
        let right = self.child(obj, "right", path)?;
        Ok(Kind(if logical {
            NodeKind::Logical { op, left, right }
        } else {
            NodeKind::Binary { op, left, right }
        }))
    }

    fn known(&self, ty: &str, obj: &Obj, path: &str) -> Result<Shape, SchemaError> {
        Ok(match ty {
            "Program" => match self.children(obj, "body", path)? {
                Some(body) => Kind(NodeKind::Program(body)),
                None => Unsupported,
            },
            "BlockStatement" => match self.children(obj, "body", path)? {
                Some(body) => Kind(NodeKind::Block(body)),
                None => Unsupported,
            },
            "FunctionDeclaration" => {
                let id = field(obj, "id", path)?;
                let name = if id.is_null() { None } else { name_of(id, &format!("{path}.id"))? };
                match (name, self.function(obj, path)?) {
                    (Some(name), Some((params, body))) => Kind(NodeKind::FunctionDecl { name, params, body }),
                    _ => Unsupported,
                }
            }
            "FunctionExpression" => {
                let name = match obj.get("id") {
                    None | Some(Value::Null) => Some(None),
                    Some(id) => name_of(id, &format!("{path}.id"))?.map(Some),
                };
                match (name, self.function(obj, path)?) {
                    (Some(name), Some((params, body))) => Kind(NodeKind::FunctionExpr { name, params, body }),
                    _ => Unsupported,
                }
            }
            "VariableDeclaration" => {
                let Some(kind) = DeclKind::parse(str_field(obj, "kind", path)?) else {
                    return Ok(Unsupported);
                };
                let decls = array_field(obj, "declarations", path)?;
                let mut declarators = Vec::with_capacity(decls.len());
                for (i, d) in decls.iter().enumerate() {
                    let p = format!("{path}.declarations[{i}]");
                    let dobj = as_obj(d, &p)?;
                    let Some(name) = name_of(field(dobj, "id", &p)?, &format!("{p}.id"))? else {
                        return Ok(Unsupported);
                    };
                    let (start, end) = read_loc(dobj, &p)?;
                    let init = match dobj.get("init") {
                        None | Some(Value::Null) => None,
                        Some(v) => Some(self.node(v, &format!("{p}.init"))?),
                    };
                    let end = end.unwrap_or_else(|| init.as_ref().map_or(start, |n| n.span.end.max(start)));
                    declarators.push(Declarator {
                        name,
                        span: Span::new(start, end),
                        init,
                    });
                }
                Kind(NodeKind::VarDecl { kind, declarators })
            }
            "ExpressionStatement" => Kind(NodeKind::ExprStmt(self.child(obj, "expression", path)?)),
            "IfStatement" => Kind(NodeKind::If {
                test: self.child(obj, "test", path)?,
                consequent: self.child(obj, "consequent", path)?,
                alternate: self.opt_child(obj, "alternate", path)?,
            }),
            "ForStatement" => Kind(NodeKind::For {
                init: self.opt_child(obj, "init", path)?,
                test: self.opt_child(obj, "test", path)?,
                update: self.opt_child(obj, "update", path)?,
                body: self.child(obj, "body", path)?,
            }),
            "WhileStatement" => Kind(NodeKind::While {
                test: self.child(obj, "test", path)?,
                body: self.child(obj, "body", path)?,
            }),
            "ReturnStatement" => Kind(NodeKind::Return(self.opt_child(obj, "argument", path)?)),
            "AssignmentExpression" => Kind(NodeKind::Assign {
                op: str_field(obj, "operator", path)?.to_string(),
                target: self.child(obj, "left", path)?,
                value: self.child(obj, "right", path)?,
            }),
            "CallExpression" => match self.children(obj, "arguments", path)? {
                Some(args) => Kind(NodeKind::Call {
                    callee: self.child(obj, "callee", path)?,
                    args,
                }),
                None => Unsupported,
            },
            "MemberExpression" => {
                let object = self.child(obj, "object", path)?;
                let prop_path = format!("{path}.property");
                let prop = field(obj, "property", path)?;
                let property = if bool_field(obj, "computed", path)? {
                    MemberProperty::Computed(Box::new(self.node(prop, &prop_path)?))
                } else {
                    let Some(name) = name_of(prop, &prop_path)? else {
                        return Ok(Unsupported);
                    };
                    let (start, end) = read_loc(as_obj(prop, &prop_path)?, &prop_path)?;
                    let end = end.unwrap_or(Pos::new(start.line, start.column + name.chars().count() as u32));
                    MemberProperty::Named {
                        name,
                        span: Span::new(start, end),
                    }
                };
                Kind(NodeKind::Member { object, property })
            }
            "BinaryExpression" => self.binary(obj, path, false)?,
            "LogicalExpression" => self.binary(obj, path, true)?,
            "UnaryExpression" => Kind(NodeKind::Unary {
                op: str_field(obj, "operator", path)?.to_string(),
                operand: self.child(obj, "argument", path)?,
            }),
            "UpdateExpression" => Kind(NodeKind::Update {
                op: str_field(obj, "operator", path)?.to_string(),
                prefix: bool_field(obj, "prefix", path)?,
                operand: self.child(obj, "argument", path)?,
            }),
            "ConditionalExpression" => Kind(NodeKind::Conditional {
                test: self.child(obj, "test", path)?,
                consequent: self.child(obj, "consequent", path)?,
                alternate: self.child(obj, "alternate", path)?,
            }),
            "Identifier" => Kind(NodeKind::Identifier(str_field(obj, "name", path)?.to_string())),
            "ThisExpression" => Kind(NodeKind::This),
            "Literal" => match literal_value(obj, path)? {
                Some(v) => Kind(NodeKind::Literal(v)),
                None => Unsupported,
            },
            "ArrayExpression" => match self.children(obj, "elements", path)? {
                Some(items) => Kind(NodeKind::Array(items)),
                None => Unsupported,
            },
            "ObjectExpression" => {
                let props = array_field(obj, "properties", path)?;
                let mut out = Vec::with_capacity(props.len());
                for (i, p) in props.iter().enumerate() {
                    let pp = format!("{path}.properties[{i}]");
                    let pobj = as_obj(p, &pp)?;
                    if str_field(pobj, "type", &pp)? != "Property"
                        || pobj.get("computed").and_then(Value::as_bool) == Some(true)
                        || pobj.get("kind").and_then(Value::as_str).is_some_and(|k| k != "init")
                    {
                        return Ok(Unsupported);
                    }
                    let key_v = field(pobj, "key", &pp)?;
                    let kp = format!("{pp}.key");
                    let key = match type_of(key_v, &kp)? {
                        "Identifier" => str_field(as_obj(key_v, &kp)?, "name", &kp)?.to_string(),
                        "Literal" => match literal_value(as_obj(key_v, &kp)?, &kp)? {
                            Some(v) => v.to_string(),
                            None => return Ok(Unsupported),
                        },
                        _ => return Ok(Unsupported),
                    };
                    let value = self.node(field(pobj, "value", &pp)?, &format!("{pp}.value"))?;
                    let (start, end) = read_loc(pobj, &pp)?;
                    out.push(Property {
                        key,
                        span: Span::new(start, end.unwrap_or(value.span.end.max(start))),
                        value,
                    });
                }
                Kind(NodeKind::Object(out))
            }
            _ => Unsupported,
        })
    }
}

fn literal_value(obj: &Obj, path: &str) -> Result<Option<LiteralValue>, SchemaError> {
    if obj.contains_key("regex") || obj.contains_key("bigint") {
        return Ok(None);
    }
    Ok(match field(obj, "value", path)? {
        Value::Null => match obj.get("raw").and_then(Value::as_str) {
            None | Some("null") => Some(LiteralValue::Null),
            Some(raw) => lexer::parse_number(raw).map(LiteralValue::Number),
        },
        Value::Bool(b) => Some(LiteralValue::Boolean(*b)),
        Value::Number(n) => Some(LiteralValue::Number(
            n.as_f64()
                .ok_or_else(|| schema(&format!("{path}.value"), "number out of range"))?,
        )),
        Value::String(s) => Some(LiteralValue::String(s.clone())),
        Value::Array(_) | Value::Object(_) => None,
    })
}

/// Reads one tree.
pub fn ingest(document: &Value) -> Result<Node, SchemaError> {
    Ingest.node(document, "$")
}

/// Reads one tree from JSON text.
pub fn ingest_str(text: &str) -> Result<Node, SchemaError> {
    let v: Value = serde_json::from_str(text).map_err(|e| schema("$", format!("invalid JSON: {e}")))?;
    ingest(&v)
}

/// One manifest line: a Program document, optionally carrying its file id.
pub fn manifest_line(file_id: &str, program: &Node) -> String {
    let mut v = export(program);
    v["fileId"] = Value::String(file_id.to_string());
    serde_json::to_string(&v).expect("JSON values always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use namebug_core::frontend::{parse, KindTag};
    use namebug_core::naming::extract_name;

    fn program_body(n: &Node) -> &[Node] {
        match &n.kind {
            NodeKind::Program(b) => b,
            _ => panic!("not a program"),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for src in [
            "f(a, b);",
            "var x = 23, y;\nlet s = 'a b';",
            "for (var i = 0; i !== len; ++i) { total += x.y[3]; }",
            "if (a && !b) { return; } else { c = d ? e : null; }",
            "function g(p, q) { return function () { return this.k; }; }",
            "o = { a: 1, 'b': [true, false] }; while (n--) {}",
            "z = typeof w === 'undefined' || v instanceof T;",
        ] {
            let ast = parse(src, "t.js").unwrap();
            let doc = export(&ast);
            let back = ingest(&doc).unwrap();
            assert_eq!(back, ast, "{src}");
            let text = serde_json::to_string(&doc).unwrap();
            assert_eq!(ingest_str(&text).unwrap(), ast);
        }
    }

    #[test]
    fn call_document_matches_parser_modulo_spans() {
        let doc = json!({
            "type": "Program", "loc": {"line": 1, "column": 0},
            "body": [{
                "type": "ExpressionStatement", "loc": {"line": 1, "column": 0},
                "expression": {
                    "type": "CallExpression", "loc": {"line": 1, "column": 0},
                    "callee": {"type": "Identifier", "name": "f", "loc": {"line": 1, "column": 0}},
                    "arguments": [
                        {"type": "Identifier", "name": "a", "loc": {"line": 1, "column": 2}},
                        {"type": "Identifier", "name": "b", "loc": {"line": 1, "column": 4}}
                    ]
                }
            }]
        });
        let ast = ingest(&doc).unwrap();
        assert!(namebug_core::frontend::ast::same_shape(&ast, &parse("f(a,b);", "t.js").unwrap()));
        // Missing end positions are widened over the children.
        assert_eq!(ast.span.end, Pos::new(1, 4));
    }

    #[test]
    fn unsupported_types_become_opaque() {
        let doc = json!({
            "type": "Program", "loc": {"line": 1, "column": 0},
            "body": [{
                "type": "WithStatement", "loc": {"line": 1, "column": 0},
                "object": {"type": "Identifier", "name": "o", "loc": {"line": 1, "column": 6}},
                "body": {"type": "ExpressionStatement", "loc": {"line": 1, "column": 9},
                    "expression": {"type": "Identifier", "name": "x", "loc": {"line": 1, "column": 9}}}
            }, {
                "type": "ExpressionStatement", "loc": {"line": 2, "column": 0},
                "expression": {"type": "BinaryExpression", "operator": "**",
                    "loc": {"start": {"line": 2, "column": 0}, "end": {"line": 2, "column": 6}},
                    "left": {"type": "Identifier", "name": "a", "loc": {"line": 2, "column": 0}},
                    "right": {"type": "Literal", "value": 2, "loc": {"line": 2, "column": 5}}}
            }, {
                "type": "ExpressionStatement", "loc": {"line": 3, "column": 0},
                "expression": {"type": "Literal", "value": {}, "regex": {"pattern": "a", "flags": ""},
                    "loc": {"line": 3, "column": 0}}
            }]
        });
        let ast = ingest(&doc).unwrap();
        let body = program_body(&ast);
        assert_eq!(body[0].tag(), KindTag::Opaque);
        let NodeKind::Opaque { type_name, children } = &body[0].kind else { unreachable!() };
        assert_eq!(type_name, "WithStatement");
        assert_eq!(children.len(), 2);
        let NodeKind::ExprStmt(pow) = &body[1].kind else { unreachable!() };
        assert_eq!(pow.tag(), KindTag::Opaque);
        assert_eq!(extract_name(pow), None);
        assert_eq!(pow.children().len(), 2);
        let NodeKind::ExprStmt(re) = &body[2].kind else { unreachable!() };
        assert_eq!(re.tag(), KindTag::Opaque);
        // Opaque subtrees survive a second round trip.
        assert_eq!(ingest(&export(&ast)).unwrap(), ast);
    }

    #[test]
    fn schema_errors_name_the_path() {
        let err = ingest(&json!({"loc": {"line": 1, "column": 0}})).unwrap_err();
        assert_eq!(err.path, "$");
        assert!(err.message.contains("\"type\""));
        let err = ingest(&json!({
            "type": "Program", "loc": {"line": 1, "column": 0},
            "body": [{"type": "ExpressionStatement", "loc": {"line": 1, "column": 0},
                "expression": {"type": "Identifier", "loc": {"line": 1, "column": 0}}}]
        }))
        .unwrap_err();
        assert_eq!(err.path, "$.body[0].expression");
        let err = ingest(&json!({"type": "Program", "body": []})).unwrap_err();
        assert!(err.path.ends_with(".loc"));
        let err = ingest(&json!({"type": "Program", "loc": {"line": "1", "column": 0}, "body": []})).unwrap_err();
        assert_eq!(err.path, "$.loc.line");
        assert!(ingest_str("{").is_err());
    }
}
