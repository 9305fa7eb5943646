use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::frontend::ops::BinaryOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub const fn new(line: u32, column: u32) -> Self {
        Pos { line, column }
    }
}

/// Source range; `end` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub const fn new(start: Pos, end: Pos) -> Self {
        Span { start, end }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LiteralValue {
    Number(f64),
    String(String),
    Boolean(bool),
    Null,
}

impl LiteralValue {
    pub fn literal_type(&self) -> LiteralType {
        match self {
            LiteralValue::Number(_) => LiteralType::Number,
            LiteralValue::String(_) => LiteralType::String,
            LiteralValue::Boolean(_) => LiteralType::Boolean,
            LiteralValue::Null => LiteralType::Null,
        }
    }
}

/// Renders the value the way names and embedding tokens see it: numbers in
/// shortest round-trip decimal form, strings unquoted.
impl fmt::Display for LiteralValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiteralValue::Number(n) => write!(f, "{n}"),
            LiteralValue::String(s) => f.write_str(s),
            LiteralValue::Boolean(b) => write!(f, "{b}"),
            LiteralValue::Null => f.write_str("null"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LiteralType {
    Number,
    String,
    Boolean,
    Null,
}

impl LiteralType {
    pub const ALL: [LiteralType; 4] = [
        LiteralType::Number,
        LiteralType::String,
        LiteralType::Boolean,
        LiteralType::Null,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LiteralType::Number => "number",
            LiteralType::String => "string",
            LiteralType::Boolean => "boolean",
            LiteralType::Null => "null",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeclKind {
    Var,
    Let,
    Const,
}

impl DeclKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeclKind::Var => "var",
            DeclKind::Let => "let",
            DeclKind::Const => "const",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "var" => Some(DeclKind::Var),
            "let" => Some(DeclKind::Let),
            "const" => Some(DeclKind::Const),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declarator {
    pub name: String,
    pub span: Span,
    pub init: Option<Node>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub key: String,
    pub span: Span,
    pub value: Node,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MemberProperty {
    /// `base.name`
    Named { name: String, span: Span },
    /// `base[index]`
    Computed(Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub span: Span,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Program(Vec<Node>),
    FunctionDecl {
        name: String,
        params: Vec<String>,
        body: Box<Node>,
    },
    FunctionExpr {
        name: Option<String>,
        params: Vec<String>,
        body: Box<Node>,
    },
    Block(Vec<Node>),
    VarDecl {
        kind: DeclKind,
        declarators: Vec<Declarator>,
    },
    ExprStmt(Box<Node>),
    If {
        test: Box<Node>,
        consequent: Box<Node>,
        alternate: Option<Box<Node>>,
    },
    For {
        init: Option<Box<Node>>,
        test: Option<Box<Node>>,
        update: Option<Box<Node>>,
        body: Box<Node>,
    },
    While {
        test: Box<Node>,
        body: Box<Node>,
    },
    Return(Option<Box<Node>>),
    Assign {
        op: String,
        target: Box<Node>,
        value: Box<Node>,
    },
    Call {
        callee: Box<Node>,
        args: Vec<Node>,
    },
    Member {
        object: Box<Node>,
        property: MemberProperty,
    },
    Binary {
        op: BinaryOp,
        left: Box<Node>,
        right: Box<Node>,
    },
    /// `&&` and `||`; the operator is still drawn from the binary alphabet.
    Logical {
        op: BinaryOp,
        left: Box<Node>,
        right: Box<Node>,
    },
    Unary {
        op: String,
        operand: Box<Node>,
    },
    Update {
        op: String,
        prefix: bool,
        operand: Box<Node>,
    },
    Conditional {
        test: Box<Node>,
        consequent: Box<Node>,
        alternate: Box<Node>,
    },
    Identifier(String),
    Literal(LiteralValue),
    This,
    Array(Vec<Node>),
    Object(Vec<Property>),
    /// A node from an external tree whose type is outside the subset. Names
    /// are never extracted from it, but its children are still traversed.
    Opaque {
        type_name: String,
        children: Vec<Node>,
    },
}

/// Field-less discriminant of [`NodeKind`], used wherever a node's kind is
/// data (parent/grandparent context, kind encodings).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KindTag {
    Program,
    FunctionDecl,
    FunctionExpr,
    Block,
    VarDecl,
    ExprStmt,
    If,
    For,
    While,
    Return,
    Assign,
    Call,
    Member,
    Binary,
    Logical,
    Unary,
    Update,
    Conditional,
    Identifier,
    Literal,
    This,
    Array,
    Object,
    Opaque,
}

impl KindTag {
    pub const ALL: [KindTag; 24] = [
        KindTag::Program,
        KindTag::FunctionDecl,
        KindTag::FunctionExpr,
        KindTag::Block,
        KindTag::VarDecl,
        KindTag::ExprStmt,
        KindTag::If,
        KindTag::For,
        KindTag::While,
        KindTag::Return,
        KindTag::Assign,
        KindTag::Call,
        KindTag::Member,
        KindTag::Binary,
        KindTag::Logical,
        KindTag::Unary,
        KindTag::Update,
        KindTag::Conditional,
        KindTag::Identifier,
        KindTag::Literal,
        KindTag::This,
        KindTag::Array,
        KindTag::Object,
        KindTag::Opaque,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KindTag::Program => "Program",
            KindTag::FunctionDecl => "FunctionDecl",
            KindTag::FunctionExpr => "FunctionExpr",
            KindTag::Block => "Block",
            KindTag::VarDecl => "VarDecl",
            KindTag::ExprStmt => "ExprStmt",
            KindTag::If => "If",
            KindTag::For => "For",
            KindTag::While => "While",
            KindTag::Return => "Return",
            KindTag::Assign => "Assign",
            KindTag::Call => "Call",
            KindTag::Member => "Member",
            KindTag::Binary => "Binary",
            KindTag::Logical => "Logical",
            KindTag::Unary => "Unary",
            KindTag::Update => "Update",
            KindTag::Conditional => "Conditional",
            KindTag::Identifier => "Identifier",
            KindTag::Literal => "Literal",
            KindTag::This => "This",
            KindTag::Array => "Array",
            KindTag::Object => "Object",
            KindTag::Opaque => "Opaque",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for KindTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Node {
    pub fn new(kind: NodeKind, span: Span) -> Self {
        Node { span, kind }
    }

    pub fn tag(&self) -> KindTag {
        match &self.kind {
            NodeKind::Program(_) => KindTag::Program,
            NodeKind::FunctionDecl { .. } => KindTag::FunctionDecl,
            NodeKind::FunctionExpr { .. } => KindTag::FunctionExpr,
            NodeKind::Block(_) => KindTag::Block,
            NodeKind::VarDecl { .. } => KindTag::VarDecl,
            NodeKind::ExprStmt(_) => KindTag::ExprStmt,
            NodeKind::If { .. } => KindTag::If,
            NodeKind::For { .. } => KindTag::For,
            NodeKind::While { .. } => KindTag::While,
            NodeKind::Return(_) => KindTag::Return,
            NodeKind::Assign { .. } => KindTag::Assign,
            NodeKind::Call { .. } => KindTag::Call,
            NodeKind::Member { .. } => KindTag::Member,
            NodeKind::Binary { .. } => KindTag::Binary,
            NodeKind::Logical { .. } => KindTag::Logical,
            NodeKind::Unary { .. } => KindTag::Unary,
            NodeKind::Update { .. } => KindTag::Update,
            NodeKind::Conditional { .. } => KindTag::Conditional,
            NodeKind::Identifier(_) => KindTag::Identifier,
            NodeKind::Literal(_) => KindTag::Literal,
            NodeKind::This => KindTag::This,
            NodeKind::Array(_) => KindTag::Array,
            NodeKind::Object(_) => KindTag::Object,
            NodeKind::Opaque { .. } => KindTag::Opaque,
        }
    }

    /// Child nodes in source order.
    pub fn children(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        match &self.kind {
            NodeKind::Program(body) | NodeKind::Block(body) | NodeKind::Array(body) => {
                out.extend(body.iter())
            }
            NodeKind::Opaque { children, .. } => out.extend(children.iter()),
            NodeKind::FunctionDecl { body, .. } | NodeKind::FunctionExpr { body, .. } => {
                out.push(&**body)
            }
            NodeKind::VarDecl { declarators, .. } => {
                out.extend(declarators.iter().filter_map(|d| d.init.as_ref()))
            }
            NodeKind::ExprStmt(e) => out.push(&**e),
            NodeKind::If {
                test,
                consequent,
                alternate,
            } => {
                out.push(&**test);
                out.push(&**consequent);
                out.extend(alternate.as_deref());
            }
            NodeKind::For {
                init,
                test,
                update,
                body,
            } => {
                out.extend(init.as_deref());
                out.extend(test.as_deref());
                out.extend(update.as_deref());
                out.push(&**body);
            }
            NodeKind::While { test, body } => {
                out.push(&**test);
                out.push(&**body);
            }
            NodeKind::Return(arg) => out.extend(arg.as_deref()),
            NodeKind::Assign { target, value, .. } => {
                out.push(&**target);
                out.push(&**value);
            }
            NodeKind::Call { callee, args } => {
                out.push(&**callee);
                out.extend(args.iter());
            }
            NodeKind::Member { object, property } => {
                out.push(&**object);
                if let MemberProperty::Computed(index) = property {
                    out.push(&**index);
                }
            }
            NodeKind::Binary { left, right, .. } | NodeKind::Logical { left, right, .. } => {
                out.push(&**left);
                out.push(&**right);
            }
            NodeKind::Unary { operand, .. } | NodeKind::Update { operand, .. } => {
                out.push(&**operand)
            }
            NodeKind::Conditional {
                test,
                consequent,
                alternate,
            } => {
                out.push(&**test);
                out.push(&**consequent);
                out.push(&**alternate);
            }
            NodeKind::Object(props) => out.extend(props.iter().map(|p| &p.value)),
            NodeKind::Identifier(_) | NodeKind::Literal(_) | NodeKind::This => {}
        }
        out
    }

    /// Pre-order traversal; the callback receives each node together with its
    /// ancestors (nearest last).
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Node, &[&'a Node])) {
        let mut ancestors = Vec::new();
        walk_inner(self, &mut ancestors, f);
    }

    pub fn count_nodes(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_, _| n += 1);
        n
    }
}

fn walk_inner<'a>(
    node: &'a Node,
    ancestors: &mut Vec<&'a Node>,
    f: &mut impl FnMut(&'a Node, &[&'a Node]),
) {
    f(node, ancestors);
    ancestors.push(node);
    for child in node.children() {
        walk_inner(child, ancestors, f);
    }
    ancestors.pop();
}

/// Structural equality ignoring spans.
pub fn same_shape(a: &Node, b: &Node) -> bool {
    let mut a = a.clone();
    let mut b = b.clone();
    clear_spans(&mut a);
    clear_spans(&mut b);
    a == b
}

pub fn clear_spans(node: &mut Node) {
    node.span = Span::default();
    match &mut node.kind {
        NodeKind::Program(body) | NodeKind::Block(body) | NodeKind::Array(body) => {
            body.iter_mut().for_each(clear_spans)
        }
        NodeKind::Opaque { children, .. } => children.iter_mut().for_each(clear_spans),
        NodeKind::FunctionDecl { body, .. } | NodeKind::FunctionExpr { body, .. } => {
            clear_spans(body)
        }
        NodeKind::VarDecl { declarators, .. } => {
            for d in declarators {
                d.span = Span::default();
                if let Some(init) = &mut d.init {
                    clear_spans(init);
                }
            }
        }
        NodeKind::ExprStmt(e) => clear_spans(e),
        NodeKind::If {
            test,
            consequent,
            alternate,
        } => {
            clear_spans(test);
            clear_spans(consequent);
            if let Some(a) = alternate {
                clear_spans(a);
            }
        }
        NodeKind::For {
            init,
            test,
            update,
            body,
        } => {
            for part in [init, test, update].into_iter().flatten() {
                clear_spans(part);
            }
            clear_spans(body);
        }
        NodeKind::While { test, body } => {
            clear_spans(test);
            clear_spans(body);
        }
        NodeKind::Return(arg) => {
            if let Some(a) = arg {
                clear_spans(a);
            }
        }
        NodeKind::Assign { target, value, .. } => {
            clear_spans(target);
            clear_spans(value);
        }
        NodeKind::Call { callee, args } => {
            clear_spans(callee);
            args.iter_mut().for_each(clear_spans);
        }
        NodeKind::Member { object, property } => {
            clear_spans(object);
            match property {
                MemberProperty::Named { span, .. } => *span = Span::default(),
                MemberProperty::Computed(index) => clear_spans(index),
            }
        }
        NodeKind::Binary { left, right, .. } | NodeKind::Logical { left, right, .. } => {
            clear_spans(left);
            clear_spans(right);
        }
        NodeKind::Unary { operand, .. } | NodeKind::Update { operand, .. } => clear_spans(operand),
        NodeKind::Conditional {
            test,
            consequent,
            alternate,
        } => {
            clear_spans(test);
            clear_spans(consequent);
            clear_spans(alternate);
        }
        NodeKind::Object(props) => {
            for p in props {
                p.span = Span::default();
                clear_spans(&mut p.value);
            }
        }
        NodeKind::Identifier(_) | NodeKind::Literal(_) | NodeKind::This => {}
    }
}
