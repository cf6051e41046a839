//! Syntax tree for the scripting language.
//!
//! Every node carries a [`NodeId`] that is unique within its [`Program`] and a
//! byte [`Span`] into the source it was parsed from. Transformations that copy
//! subtrees (function inlining, for instance) allocate fresh ids through
//! [`IdGen`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Half-open byte range `[start, end)` in the source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

/// Numeric literal. Literals without a decimal point or exponent are `Int`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Number {
    Int(i32),
    Real(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Number(Number),
    Bool(bool),
    /// Texture name. Only legal as the first argument of `imagergb` and `colorplot`.
    Str(String),
    List(Vec<Node>),
    Var(String),
    Assign {
        target: String,
        value: Box<Node>,
    },
    /// Builtin or user function call. Operators are calls too: `+`, `-`, `*`,
    /// `/`, `^`, comparisons, `&`, `%`, `neg` (unary minus), `not` and `abs`
    /// (written `|x|`).
    Call {
        name: String,
        args: Vec<Node>,
    },
    FunDef {
        name: String,
        params: Vec<String>,
        body: Box<Node>,
    },
    If {
        cond: Box<Node>,
        then: Box<Node>,
        otherwise: Option<Box<Node>>,
    },
    /// `repeat(count, body)`; `#` is bound to `1..=count` inside `body`.
    Repeat {
        count: Box<Node>,
        body: Box<Node>,
    },
    /// `apply(list, var, body)`: maps `body` over `list` with `var` bound to each element.
    Apply {
        list: Box<Node>,
        var: String,
        body: Box<Node>,
    },
    Seq(Vec<Node>),
    /// `base_index`, 1-based. `.x`, `.y`, `.z` desugar to indices 1, 2, 3.
    Index {
        base: Box<Node>,
        index: Box<Node>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub span: Span,
}

/// Names with a fixed value that are never treated as variables.
pub const BUILTIN_CONSTANTS: &[&str] = &["i", "pi"];

pub fn is_builtin_constant(name: &str) -> bool {
    BUILTIN_CONSTANTS.contains(&name)
}

impl Node {
    pub fn new(id: NodeId, kind: NodeKind, span: Span) -> Node {
        Node { id, kind, span }
    }

    /// Direct children in evaluation order.
    pub fn children(&self) -> Vec<&Node> {
        match &self.kind {
            NodeKind::Number(_) | NodeKind::Bool(_) | NodeKind::Str(_) | NodeKind::Var(_) => {
                Vec::new()
            }
            NodeKind::List(items) | NodeKind::Seq(items) => items.iter().collect(),
            NodeKind::Call { args, .. } => args.iter().collect(),
            NodeKind::Assign { value, .. } => vec![value],
            NodeKind::FunDef { body, .. } => vec![body],
            NodeKind::If {
                cond,
                then,
                otherwise,
            } => {
                let mut out = vec![cond.as_ref(), then.as_ref()];
                if let Some(o) = otherwise {
                    out.push(o);
                }
                out
            }
            NodeKind::Repeat { count, body } => vec![count, body],
            NodeKind::Apply { list, body, .. } => vec![list, body],
            NodeKind::Index { base, index } => vec![base, index],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Node> {
        match &mut self.kind {
            NodeKind::Number(_) | NodeKind::Bool(_) | NodeKind::Str(_) | NodeKind::Var(_) => {
                Vec::new()
            }
            NodeKind::List(items) | NodeKind::Seq(items) => items.iter_mut().collect(),
            NodeKind::Call { args, .. } => args.iter_mut().collect(),
            NodeKind::Assign { value, .. } => vec![value],
            NodeKind::FunDef { body, .. } => vec![body],
            NodeKind::If {
                cond,
                then,
                otherwise,
            } => {
                let mut out = vec![cond.as_mut(), then.as_mut()];
                if let Some(o) = otherwise {
                    out.push(o);
                }
                out
            }
            NodeKind::Repeat { count, body } => vec![count, body],
            NodeKind::Apply { list, body, .. } => vec![list, body],
            NodeKind::Index { base, index } => vec![base, index],
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Node)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn find(&self, id: NodeId) -> Option<&Node> {
        if self.id == id {
            return Some(self);
        }
        self.children().into_iter().find_map(|c| c.find(id))
    }

    pub fn is_call(&self, name: &str) -> bool {
        matches!(&self.kind, NodeKind::Call { name: n, .. } if n == name)
    }

    /// Structural equality ignoring ids and spans.
    pub fn same_shape(&self, other: &Node) -> bool {
        use NodeKind::*;
        let same_children = || {
            let a = self.children();
            let b = other.children();
            a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.same_shape(y))
        };
        match (&self.kind, &other.kind) {
            (Number(self::Number::Int(a)), Number(self::Number::Int(b))) => a == b,
            (Number(self::Number::Real(a)), Number(self::Number::Real(b))) => a.to_bits() == b.to_bits(),
            (Bool(a), Bool(b)) => a == b,
            (Str(a), Str(b)) => a == b,
            (Var(a), Var(b)) => a == b,
            (List(_), List(_)) | (Seq(_), Seq(_)) | (Index { .. }, Index { .. }) => same_children(),
            (Assign { target: a, .. }, Assign { target: b, .. }) => a == b && same_children(),
            (Call { name: a, .. }, Call { name: b, .. }) => a == b && same_children(),
            (
                FunDef {
                    name: a, params: pa, ..
                },
                FunDef {
                    name: b, params: pb, ..
                },
            ) => a == b && pa == pb && same_children(),
            (If { otherwise: a, .. }, If { otherwise: b, .. }) => {
                a.is_some() == b.is_some() && same_children()
            }
            (Repeat { .. }, Repeat { .. }) => same_children(),
            (Apply { var: a, .. }, Apply { var: b, .. }) => a == b && same_children(),
            _ => false,
        }
    }

    /// Canonical source text; see [`crate::printer`].
    pub fn to_source(&self) -> String {
        crate::printer::print_node(self)
    }

    /// JSON dump: `{ "id", "kind", "span": [start, end], "children": [...] }` plus
    /// a kind-specific `"name"` / `"value"` field.
    pub fn to_json(&self) -> serde_json::Value {
        let (kind, extra) = match &self.kind {
            NodeKind::Number(Number::Int(v)) => ("NumberLit", json!({ "value": v })),
            NodeKind::Number(Number::Real(v)) => ("NumberLit", json!({ "value": v })),
            NodeKind::Bool(b) => ("BoolLit", json!({ "value": b })),
            NodeKind::Str(s) => ("StrLit", json!({ "value": s })),
            NodeKind::List(_) => ("ListLit", json!({})),
            NodeKind::Var(n) => ("VarRef", json!({ "name": n })),
            NodeKind::Assign { target, .. } => ("Assign", json!({ "name": target })),
            NodeKind::Call { name, .. } => ("FunCall", json!({ "name": name })),
            NodeKind::FunDef { name, params, .. } => {
                ("UserFunDef", json!({ "name": name, "params": params }))
            }
            NodeKind::If { .. } => ("If", json!({})),
            NodeKind::Repeat { .. } => ("Repeat", json!({})),
            NodeKind::Apply { var, .. } => ("Apply", json!({ "name": var })),
            NodeKind::Seq(_) => ("Sequence", json!({})),
            NodeKind::Index { .. } => ("Index", json!({})),
        };
        let mut obj = json!({
            "id": self.id.0,
            "kind": kind,
            "span": [self.span.start, self.span.end],
            "children": self.children().iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        });
        if let (Some(o), serde_json::Value::Object(e)) = (obj.as_object_mut(), extra) {
            o.extend(e);
        }
        obj
    }
}

/// Fresh node-id allocator.
#[derive(Clone, Debug)]
pub struct IdGen {
    next: u32,
}

impl IdGen {
    pub fn starting_at(next: u32) -> IdGen {
        IdGen { next }
    }

    pub fn fresh(&mut self) -> NodeId {
        let id = NodeId(self.next);
        self.next += 1;
        id
    }

    pub fn peek(&self) -> u32 {
        self.next
    }

    /// Deep copy of `node` with every id replaced by a fresh one.
    pub fn recopy(&mut self, node: &Node) -> Node {
        let mut out = node.clone();
        self.renumber(&mut out);
        out
    }

    fn renumber(&mut self, node: &mut Node) {
        node.id = self.fresh();
        for c in node.children_mut() {
            self.renumber(c);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserFunction {
    pub name: String,
    pub params: Vec<String>,
    pub body: Node,
    pub def_id: NodeId,
}

impl UserFunction {
    /// Names assigned anywhere in the body. These are local to each call.
    pub fn locals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.body.walk(&mut |n| {
            if let NodeKind::Assign { target, .. } = &n.kind {
                out.insert(target.clone());
            }
        });
        for p in &self.params {
            out.remove(p);
        }
        out
    }
}

#[derive(Clone, Debug, thiserror::Error, PartialEq)]
pub enum ProgramError {
    #[error("user function `{0}` is recursive (call chain: {1})")]
    Recursive(String, String),
    #[error("function `{0}` defined twice with {1} parameters")]
    DuplicateFunction(String, usize),
    #[error("function definitions must appear at top level")]
    NestedDefinition(Span),
    #[error("`{0}` is a builtin and cannot be redefined")]
    RedefinesBuiltin(String),
}

impl ProgramError {
    pub fn span(&self) -> Option<Span> {
        match self {
            ProgramError::NestedDefinition(s) => Some(*s),
            _ => None,
        }
    }
}

/// A parsed script: top-level statements plus the user function table.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub statements: Vec<Node>,
    pub functions: BTreeMap<(String, usize), UserFunction>,
    /// Id reserved for the sequence node built by [`Program::as_body`].
    body_id: NodeId,
    next_id: u32,
}

impl Program {
    /// Builds the function table and rejects recursion and nested definitions.
    pub fn new(statements: Vec<Node>, next_id: u32) -> Result<Program, ProgramError> {
        let mut functions = BTreeMap::new();
        for stmt in &statements {
            let mut nested = None;
            for c in stmt.children() {
                c.walk(&mut |n| {
                    if nested.is_none() && matches!(n.kind, NodeKind::FunDef { .. }) {
                        nested = Some(n.span);
                    }
                });
            }
            if let Some(span) = nested {
                return Err(ProgramError::NestedDefinition(span));
            }
            if let NodeKind::FunDef { name, params, body } = &stmt.kind {
                if crate::builtins::is_reserved_name(name) {
                    return Err(ProgramError::RedefinesBuiltin(name.clone()));
                }
                let key = (name.clone(), params.len());
                let f = UserFunction {
                    name: name.clone(),
                    params: params.clone(),
                    body: (**body).clone(),
                    def_id: stmt.id,
                };
                if functions.insert(key, f).is_some() {
                    return Err(ProgramError::DuplicateFunction(name.clone(), params.len()));
                }
            }
        }
        let program = Program {
            statements,
            functions,
            body_id: NodeId(next_id),
            next_id: next_id + 1,
        };
        program.check_recursion()?;
        Ok(program)
    }

    pub fn id_gen(&self) -> IdGen {
        IdGen::starting_at(self.next_id)
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    pub fn function(&self, name: &str, arity: usize) -> Option<&UserFunction> {
        self.functions.get(&(name.to_string(), arity))
    }

    fn callees(&self, f: &UserFunction) -> BTreeSet<(String, usize)> {
        let mut out = BTreeSet::new();
        f.body.walk(&mut |n| {
            if let NodeKind::Call { name, args } = &n.kind {
                let key = (name.clone(), args.len());
                if self.functions.contains_key(&key) {
                    out.insert(key);
                }
            }
        });
        out
    }

    fn check_recursion(&self) -> Result<(), ProgramError> {
        // Colors: absent = unvisited, false = on stack, true = done.
        fn visit(
            p: &Program,
            key: &(String, usize),
            state: &mut BTreeMap<(String, usize), bool>,
            stack: &mut Vec<String>,
        ) -> Result<(), ProgramError> {
            match state.get(key) {
                Some(true) => return Ok(()),
                Some(false) => {
                    stack.push(key.0.clone());
                    return Err(ProgramError::Recursive(key.0.clone(), stack.join(" -> ")));
                }
                None => {}
            }
            state.insert(key.clone(), false);
            stack.push(key.0.clone());
            for callee in p.callees(&p.functions[key]) {
                visit(p, &callee, state, stack)?;
            }
            stack.pop();
            state.insert(key.clone(), true);
            Ok(())
        }
        let mut state = BTreeMap::new();
        for key in self.functions.keys() {
            visit(self, key, &mut state, &mut Vec::new())?;
        }
        Ok(())
    }

    /// The value-producing part of the program as a single node: the only
    /// statement, or a sequence of all statements.
    pub fn as_body(&self) -> Node {
        let stmts: Vec<Node> = self
            .statements
            .iter()
            .filter(|s| !matches!(s.kind, NodeKind::FunDef { .. }))
            .cloned()
            .collect();
        if stmts.len() == 1 {
            return stmts.into_iter().next().unwrap();
        }
        let span = stmts
            .iter()
            .map(|s| s.span)
            .reduce(Span::to)
            .unwrap_or_default();
        Node::new(self.body_id, NodeKind::Seq(stmts), span)
    }

    pub fn to_source(&self) -> String {
        crate::printer::print_program(self)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "statements": self.statements.iter().map(Node::to_json).collect::<Vec<_>>(),
            "functions": self.functions.values().map(|f| json!({
                "name": f.name, "params": f.params, "def": f.def_id.0,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn same_shape(&self, other: &Program) -> bool {
        self.statements.len() == other.statements.len()
            && self
                .statements
                .iter()
                .zip(&other.statements)
                .all(|(a, b)| a.same_shape(b))
    }

    pub fn all_ids(&self) -> Vec<NodeId> {
        let mut ids = Vec::new();
        for s in &self.statements {
            s.walk(&mut |n| ids.push(n.id));
        }
        ids
    }
}

/// Names referenced but never assigned anywhere in the program, excluding
/// builtin constants and names bound by a function parameter, `repeat` or
/// `apply` at the point of use.
pub fn free_variables(program: &Program) -> BTreeSet<String> {
    let mut assigned = BTreeSet::new();
    for s in &program.statements {
        if let NodeKind::FunDef { .. } = s.kind {
            continue;
        }
        s.walk(&mut |n| {
            if let NodeKind::Assign { target, .. } = &n.kind {
                assigned.insert(target.clone());
            }
        });
    }
    let mut free = BTreeSet::new();
    for s in &program.statements {
        match &s.kind {
            NodeKind::FunDef { params, body, .. } => {
                let f = UserFunction {
                    name: String::new(),
                    params: params.clone(),
                    body: (**body).clone(),
                    def_id: s.id,
                };
                let mut bound: Vec<String> = params.clone();
                bound.extend(f.locals());
                collect_free(body, &mut bound, &mut free);
            }
            _ => collect_free(s, &mut Vec::new(), &mut free),
        }
    }
    free.retain(|n| !assigned.contains(n));
    free
}

/// Free names of a single expression (nothing assigned inside it counts as free).
pub fn free_variables_of(node: &Node) -> BTreeSet<String> {
    let mut free = BTreeSet::new();
    collect_free(node, &mut Vec::new(), &mut free);
    let mut assigned = BTreeSet::new();
    node.walk(&mut |n| {
        if let NodeKind::Assign { target, .. } = &n.kind {
            assigned.insert(target.clone());
        }
    });
    free.retain(|n| !assigned.contains(n));
    free
}

fn collect_free(node: &Node, bound: &mut Vec<String>, free: &mut BTreeSet<String>) {
    match &node.kind {
        NodeKind::Var(name) => {
            if !is_builtin_constant(name) && !bound.iter().any(|b| b == name) {
                free.insert(name.clone());
            }
        }
        NodeKind::Repeat { count, body } => {
            collect_free(count, bound, free);
            bound.push("#".to_string());
            collect_free(body, bound, free);
            bound.pop();
        }
        NodeKind::Apply { list, var, body } => {
            collect_free(list, bound, free);
            bound.push(var.clone());
            collect_free(body, bound, free);
            bound.pop();
        }
        _ => {
            for c in node.children() {
                collect_free(c, bound, free);
            }
        }
    }
}
