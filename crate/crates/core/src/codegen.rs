//! GLSL ES 1.00 fragment shader generation for the `D` part of a plot.
//!
//! Values of `U` nodes arrive as uniforms, except literals and `ConstInt`s,
//! which are inlined. Every `D` variable becomes a local of `main`. Only
//! types with a native GLSL representation are supported: scalars, complex
//! numbers as `vec2` and lists of length 2 to 4 of booleans, integers or reals.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ast::{free_variables_of, is_builtin_constant, Node, NodeId, NodeKind, Number};
use crate::printer::print_node;
use crate::value::Value;
use crate::builtins::{glsl_helper, min_sign, registry, GlslSink, Signature};
use crate::depgraph::{Binder, GKind, Graph, Split};
use crate::infer::Typing;
use crate::lower::{Lowered, RunningKind};
use crate::types::TypeTerm;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CodegenError {
    #[error("`{label}` has type {ty}, which has no shader representation")]
    UnsupportedType { label: String, ty: TypeTerm },
    #[error("no overload of `{name}` accepts ({args})")]
    NoOverload { name: String, args: String },
    #[error("`{0}` must be a compile-time integer")]
    NonConstant(String),
    #[error("{0}")]
    Emitter(String),
    #[error("value of `{0}` cannot be computed outside the shader")]
    Input(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformSpec {
    pub name: String,
    /// Type of the value in the language, e.g. `complex`.
    #[serde(rename = "type")]
    pub ty: String,
    /// GLSL type of the uniform.
    pub glsl: String,
    /// Graph node whose value the uniform carries.
    pub node: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureSpec {
    /// Texture name used in the program.
    pub name: String,
    pub sampler: String,
    /// `vec4` uniform with the world rectangle the texture covers.
    pub frame: String,
}

/// A compiled plot as handed to a rendering backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShaderArtifact {
    pub glsl: String,
    pub uniforms: Vec<UniformSpec>,
    pub textures: Vec<TextureSpec>,
    #[serde(rename = "typeKey")]
    pub type_key: String,
}

impl ShaderArtifact {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("artifact serializes")
    }

    pub fn from_json(text: &str) -> Result<ShaderArtifact, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// GLSL spelling of `t`, if it has one.
pub fn glsl_type(t: &TypeTerm) -> Option<String> {
    Some(match t {
        TypeTerm::Bool => "bool".into(),
        TypeTerm::Int | TypeTerm::ConstInt(_) => "int".into(),
        TypeTerm::Real => "float".into(),
        TypeTerm::Complex => "vec2".into(),
        TypeTerm::List(n @ 2..=4, e) => match **e {
            TypeTerm::Bool => format!("bvec{n}"),
            TypeTerm::Int | TypeTerm::ConstInt(_) => format!("ivec{n}"),
            TypeTerm::Real => format!("vec{n}"),
            _ => return None,
        },
        _ => return None,
    })
}

/// GLSL array type for a list uniform without a native vector type.
pub fn array_uniform_type(t: &TypeTerm) -> Option<String> {
    match t {
        TypeTerm::List(n, elem) if *n >= 1 => Some(format!("{}[{n}]", glsl_type(elem)?)),
        _ => None,
    }
}

fn scalar_rank(t: &TypeTerm) -> Option<u8> {
    match t {
        TypeTerm::Bool => Some(0),
        TypeTerm::Int | TypeTerm::ConstInt(_) => Some(1),
        TypeTerm::Real => Some(2),
        TypeTerm::Complex => Some(3),
        _ => None,
    }
}

/// GLSL expression embedding `expr` of type `from` into `to`.
pub fn glsl_cast(expr: &str, from: &TypeTerm, to: &TypeTerm) -> Option<String> {
    if from.forget_constants() == to.forget_constants() {
        return Some(expr.to_string());
    }
    if !from.is_subtype(to) {
        return None;
    }
    match (from, to) {
        (TypeTerm::List(..), TypeTerm::List(..)) => Some(format!("{}({expr})", glsl_type(to)?)),
        _ => {
            let (a, b) = (scalar_rank(from)?, scalar_rank(to)?);
            Some(match b {
                1 => format!("int({expr})"),
                2 => format!("float({expr})"),
                3 if a == 2 => format!("vec2({expr}, 0.0)"),
                3 => format!("vec2(float({expr}), 0.0)"),
                _ => return None,
            })
        }
    }
}

/// GLSL literal for a float.
pub fn float_literal(x: f64) -> Option<String> {
    if !x.is_finite() {
        return None;
    }
    let s = format!("{x:?}");
    Some(if s.contains(['.', 'e']) { s } else { format!("{s}.0") })
}

/// Id of synthetic nodes that only the interpreter sees.
const DETACHED: NodeId = NodeId(u32::MAX);

/// GLSL constant for a value of type `ty`.
pub fn glsl_value(v: &Value, ty: &TypeTerm) -> Option<String> {
    let v = crate::types::embed_cast(&v.type_of(), &ty.forget_constants()).ok()?.apply(v);
    Some(match (&v, ty) {
        (Value::Bool(b), _) => b.to_string(),
        (Value::Int(k), _) => k.to_string(),
        (Value::Real(x), _) => float_literal(*x)?,
        (Value::Complex(z), _) => format!("vec2({}, {})", float_literal(z.re)?, float_literal(z.im)?),
        (Value::List(items), TypeTerm::List(_, e)) => {
            let parts = items.iter().map(|i| glsl_value(i, e)).collect::<Option<Vec<_>>>()?;
            format!("{}({})", glsl_type(ty)?, parts.join(", "))
        }
        _ => return None,
    })
}

/// Closed expressions computing the `U` nodes of a plot outside the shader.
#[derive(Clone, Debug, Default)]
pub struct InputPlan {
    pub exprs: BTreeMap<usize, Node>,
    /// Nodes whose expression reads no variables and calls only pure
    /// builtins; their values are fixed by the program text.
    pub constant: BTreeSet<usize>,
}

fn is_constant_expr(e: &Node) -> bool {
    let mut ok = free_variables_of(e).iter().all(|v| is_builtin_constant(v));
    e.walk(&mut |n| {
        if let NodeKind::Call { name, .. } = &n.kind {
            ok &= registry().get(name).is_some_and(|b| b.pure);
        }
    });
    ok
}

struct AssignSite<'a> {
    node: &'a Node,
    nested: bool,
}

fn collect_assigns<'a>(node: &'a Node, nested: bool, out: &mut HashMap<String, Vec<AssignSite<'a>>>) {
    if let NodeKind::Assign { target, .. } = &node.kind {
        out.entry(target.clone()).or_default().push(AssignSite { node, nested });
    }
    let inner = nested || matches!(node.kind, NodeKind::If { .. } | NodeKind::Repeat { .. } | NodeKind::Apply { .. });
    for c in node.children() {
        collect_assigns(c, inner, out);
    }
}

/// Builds, for every `U` node that is not a loop variable, an expression
/// that evaluates it from globals alone: the node itself, preceded by the
/// assignments of the body variables it reads. A variable assigned more than
/// once, or inside a conditional or loop, has no such expression.
pub fn plan_inputs(body: &Node, graph: &Graph, split: &Split) -> Result<InputPlan, CodegenError> {
    let mut assigns = HashMap::new();
    collect_assigns(body, false, &mut assigns);
    let mut plan = InputPlan::default();
    for &u in &split.u {
        let node = &graph.nodes[u];
        let root = match &node.kind {
            GKind::Var { binder: Some(_), .. } => continue,
            GKind::Var { sources, .. } if sources.is_empty() => Node::new(DETACHED, NodeKind::Var(node.label.clone()), node.span),
            GKind::Var { .. } => {
                let name = node.var_name().expect("variable node");
                let mut prefix = Vec::new();
                resolve_var(name, &assigns, graph, &mut Vec::new(), &mut prefix)?;
                prefix.push(Node::new(DETACHED, NodeKind::Var(name.to_string()), node.span));
                plan.exprs.insert(u, Node::new(DETACHED, NodeKind::Seq(prefix), node.span));
                continue;
            }
            _ => {
                let crate::depgraph::NodeRef::Expr(id) = node.key else { unreachable!() };
                body.find(id).ok_or_else(|| CodegenError::Input(node.label.clone()))?.clone()
            }
        };
        let mut prefix = Vec::new();
        for v in free_variables_of(&root) {
            if assigns.contains_key(&v) {
                resolve_var(&v, &assigns, graph, &mut Vec::new(), &mut prefix)?;
            } else if is_binder(graph, &v) {
                return Err(CodegenError::Input(node.label.clone()));
            }
        }
        let expr = if prefix.is_empty() {
            root
        } else {
            let span = root.span;
            prefix.push(root);
            Node::new(DETACHED, NodeKind::Seq(prefix), span)
        };
        if is_constant_expr(&expr) {
            plan.constant.insert(u);
        }
        plan.exprs.insert(u, expr);
    }
    Ok(plan)
}

fn is_binder(graph: &Graph, name: &str) -> bool {
    graph
        .var(name)
        .is_some_and(|v| matches!(graph.nodes[v].kind, GKind::Var { binder: Some(_), .. }))
}

fn resolve_var(
    name: &str,
    assigns: &HashMap<String, Vec<AssignSite>>,
    graph: &Graph,
    visiting: &mut Vec<String>,
    out: &mut Vec<Node>,
) -> Result<(), CodegenError> {
    if out.iter().any(|n| matches!(&n.kind, NodeKind::Assign { target, .. } if target == name)) {
        return Ok(());
    }
    if visiting.iter().any(|v| v == name) {
        return Err(CodegenError::Input(name.to_string()));
    }
    let site = match assigns.get(name).map(Vec::as_slice) {
        Some([site]) if !site.nested => site,
        _ => return Err(CodegenError::Input(name.to_string())),
    };
    visiting.push(name.to_string());
    let NodeKind::Assign { value, .. } = &site.node.kind else { unreachable!() };
    for v in free_variables_of(value) {
        if assigns.contains_key(&v) {
            resolve_var(&v, assigns, graph, visiting, out)?;
        } else if is_binder(graph, &v) {
            return Err(CodegenError::Input(name.to_string()));
        }
    }
    visiting.pop();
    out.push(site.node.clone());
    Ok(())
}

/// Everything the generator needs about one plot.
pub struct CodegenInput<'a> {
    pub lowered: &'a Lowered,
    pub graph: &'a Graph,
    pub split: &'a Split,
    pub typing: &'a Typing,
    /// Types of the `U` nodes.
    pub inputs: &'a BTreeMap<usize, TypeTerm>,
    pub plan: &'a InputPlan,
    /// Values of the constant `U` nodes, inlined into the shader.
    pub constants: &'a BTreeMap<usize, Value>,
    pub type_key: String,
}

struct Gen<'a> {
    input: &'a CodegenInput<'a>,
    lines: Vec<String>,
    depth: usize,
    temps: usize,
    helpers: BTreeSet<&'static str>,
    uniforms: Vec<UniformSpec>,
    uniform_of: HashMap<usize, String>,
    /// Uniform slots by printed input expression, so equal subtrees share one.
    uniform_by_source: HashMap<String, String>,
    textures: Vec<TextureSpec>,
    /// Loop-local names of repeat counters.
    counters: HashMap<usize, String>,
}

impl GlslSink for Gen<'_> {
    fn helper(&mut self, name: &'static str) {
        self.helpers.insert(name);
    }

    fn temp(&mut self, expr: &str, ty: &TypeTerm) -> Result<String, String> {
        let t = glsl_type(ty).ok_or_else(|| format!("type {ty} has no shader representation"))?;
        let name = self.fresh("_t");
        self.line(format!("{t} {name} = {expr};"));
        Ok(name)
    }
}

/// Identifier-safe form of a variable name without `__` sequences.
fn sanitize(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        let c = if c.is_ascii_alphanumeric() { c } else { '_' };
        if !(c == '_' && (out.is_empty() || out.ends_with('_'))) {
            out.push(c);
        }
    }
    out.trim_end_matches('_').to_string()
}

impl<'a> Gen<'a> {
    fn fresh(&mut self, prefix: &str) -> String {
        self.temps += 1;
        format!("{prefix}{}", self.temps)
    }

    fn line(&mut self, s: String) {
        self.lines.push(format!("{}{s}", "  ".repeat(self.depth)));
    }

    fn graph(&self) -> &'a Graph {
        self.input.graph
    }

    fn label(&self, n: usize) -> String {
        self.graph().nodes[n].label.clone()
    }

    fn ty_of(&self, n: usize) -> TypeTerm {
        if self.input.split.u.contains(&n) {
            if let Some(t) = self.input.inputs.get(&n) {
                return t.clone();
            }
        }
        self.input.typing.gamma[n].clone()
    }

    fn glsl_ty(&self, n: usize, t: &TypeTerm) -> Result<String, CodegenError> {
        glsl_type(t).ok_or_else(|| CodegenError::UnsupportedType {
            label: self.label(n),
            ty: t.clone(),
        })
    }

    fn var_ident(&self, n: usize) -> String {
        let name = self.graph().nodes[n].var_name().unwrap_or("");
        format!("v{n}_{}", sanitize(name))
    }

    fn cast(&self, n: usize, expr: &str, from: &TypeTerm, to: &TypeTerm) -> Result<String, CodegenError> {
        glsl_cast(expr, from, to).ok_or_else(|| CodegenError::UnsupportedType {
            label: self.label(n),
            ty: from.clone(),
        })
    }

    fn in_d(&self, n: usize) -> bool {
        self.input.split.d.contains(&n)
    }

    fn assigns_d(&self, node: &Node) -> bool {
        let mut found = false;
        node.walk(&mut |c| {
            if let NodeKind::Assign { target, .. } = &c.kind {
                if self.graph().var(target).is_some_and(|v| self.in_d(v)) {
                    found = true;
                }
            }
        });
        found
    }

    fn u_ref(&mut self, n: usize, node: &Node) -> Result<(String, TypeTerm), CodegenError> {
        let t = self.ty_of(n);
        if let TypeTerm::ConstInt(k) = t {
            return Ok((k.to_string(), t));
        }
        match &node.kind {
            NodeKind::Number(Number::Int(k)) => return Ok((k.to_string(), TypeTerm::Int)),
            NodeKind::Number(Number::Real(x)) => {
                let lit = float_literal(*x).ok_or_else(|| CodegenError::UnsupportedType {
                    label: self.label(n),
                    ty: TypeTerm::Real,
                })?;
                return Ok((lit, TypeTerm::Real));
            }
            NodeKind::Bool(b) => return Ok((b.to_string(), TypeTerm::Bool)),
            _ => {}
        }
        if let GKind::Var {
            binder: Some(Binder::Counter(r)),
            ..
        } = self.graph().nodes[n].kind
        {
            let name = self.counters.get(&r).ok_or_else(|| CodegenError::Input(self.label(n)))?;
            return Ok((name.clone(), TypeTerm::Int));
        }
        if let Some(v) = self.input.constants.get(&n) {
            if let Some(lit) = glsl_value(v, &t) {
                return Ok((lit, t));
            }
        }
        let gt = match self.glsl_ty(n, &t) {
            Ok(gt) => gt,
            Err(e) => array_uniform_type(&t).ok_or(e)?,
        };
        if let Some(u) = self.uniform_of.get(&n) {
            return Ok((u.clone(), t));
        }
        let key = self.input.plan.exprs.get(&n).map(|e| format!("{t}:{}", print_node(e)));
        if let Some(u) = key.as_ref().and_then(|k| self.uniform_by_source.get(k)) {
            let u = u.clone();
            self.uniform_of.insert(n, u.clone());
            return Ok((u, t));
        }
        let name = format!("_u{}", self.uniforms.len());
        self.uniforms.push(UniformSpec {
            name: name.clone(),
            ty: t.to_string(),
            glsl: gt,
            node: n,
        });
        self.uniform_of.insert(n, name.clone());
        if let Some(k) = key {
            self.uniform_by_source.insert(k, name.clone());
        }
        Ok((name, t))
    }

    fn stmt(&mut self, node: &Node) -> Result<(), CodegenError> {
        match &node.kind {
            NodeKind::Assign { target, value } => {
                let v = self.graph().var(target).expect("assigned variable in graph");
                if self.in_d(v) {
                    let (e, t) = self.expr(value)?;
                    let to = self.ty_of(v);
                    let e = self.cast(v, &e, &t, &to)?;
                    let id = self.var_ident(v);
                    self.line(format!("{id} = {e};"));
                }
                Ok(())
            }
            NodeKind::Seq(items) => items.iter().try_for_each(|i| self.stmt(i)),
            NodeKind::If {
                cond,
                then,
                otherwise,
            } if self.assigns_d(node) => {
                let c = self.condition(cond)?;
                self.line(format!("if ({c}) {{"));
                self.depth += 1;
                self.stmt(then)?;
                self.depth -= 1;
                if let Some(o) = otherwise {
                    self.line("} else {".into());
                    self.depth += 1;
                    self.stmt(o)?;
                    self.depth -= 1;
                }
                self.line("}".into());
                Ok(())
            }
            NodeKind::Repeat { count, body } if self.assigns_d(node) => {
                let g = self.graph().expr(node.id).expect("repeat in graph");
                self.repeat(g, count, body, None)
            }
            NodeKind::Apply { .. } if self.assigns_d(node) => self.expr(node).map(drop),
            NodeKind::Call { .. } | NodeKind::List(_) | NodeKind::Index { .. } if self.assigns_d(node) => {
                self.expr(node).map(drop)
            }
            _ => Ok(()),
        }
    }

    fn condition(&mut self, cond: &Node) -> Result<String, CodegenError> {
        let (c, t) = self.expr(cond)?;
        if !t.is_subtype(&TypeTerm::Bool) {
            return Err(CodegenError::UnsupportedType {
                label: cond.to_source(),
                ty: t,
            });
        }
        Ok(c)
    }

    fn repeat(&mut self, g: usize, count: &Node, body: &Node, result: Option<(&str, &TypeTerm)>) -> Result<(), CodegenError> {
        let (_, ct) = self.expr(count)?;
        let TypeTerm::ConstInt(k) = ct else {
            return Err(CodegenError::NonConstant(count.to_source()));
        };
        if k < 1 {
            return Err(CodegenError::NonConstant(count.to_source()));
        }
        let loop_var = self.fresh("_k");
        self.line(format!("for (int {loop_var} = 1; {loop_var} <= {k}; {loop_var}++) {{"));
        self.depth += 1;
        self.counters.insert(g, loop_var);
        match result {
            Some((r, rt)) => {
                let (e, t) = self.expr(body)?;
                let e = self.cast(g, &e, &t, rt)?;
                self.line(format!("{r} = {e};"));
            }
            None => self.stmt(body)?,
        }
        self.counters.remove(&g);
        self.depth -= 1;
        self.line("}".into());
        Ok(())
    }

    fn expr(&mut self, node: &Node) -> Result<(String, TypeTerm), CodegenError> {
        let g = self.graph().value_of(node).expect("node in graph");
        match &node.kind {
            NodeKind::Assign { .. } => {
                self.stmt(node)?;
                return self.var_ref(g, node);
            }
            NodeKind::Seq(items) => {
                let (last, rest) = items.split_last().expect("non-empty sequence");
                for i in rest {
                    self.stmt(i)?;
                }
                return self.expr(last);
            }
            _ => {}
        }
        if !self.in_d(g) {
            return self.u_ref(g, node);
        }
        let ty = self.ty_of(g);
        match &node.kind {
            NodeKind::Var(_) => self.var_ref(g, node),
            NodeKind::List(items) => {
                let gt = self.glsl_ty(g, &ty)?;
                let elem = ty.elem().expect("list type").clone();
                let mut parts = Vec::new();
                for i in items {
                    let (e, t) = self.expr(i)?;
                    parts.push(self.cast(g, &e, &t, &elem)?);
                }
                Ok((format!("{gt}({})", parts.join(", ")), ty))
            }
            NodeKind::Call { name, args } => self.call(g, name, args, &ty),
            NodeKind::If {
                cond,
                then,
                otherwise,
            } => {
                let gt = self.glsl_ty(g, &ty)?;
                let Some(otherwise) = otherwise else {
                    return Err(CodegenError::UnsupportedType {
                        label: self.label(g),
                        ty: TypeTerm::Top,
                    });
                };
                let c = self.condition(cond)?;
                let r = self.fresh("_t");
                self.line(format!("{gt} {r};"));
                self.line(format!("if ({c}) {{"));
                for (branch, open) in [(then.as_ref(), false), (otherwise.as_ref(), true)] {
                    if open {
                        self.line("} else {".into());
                    }
                    self.depth += 1;
                    let (e, t) = self.expr(branch)?;
                    let e = self.cast(g, &e, &t, &ty)?;
                    self.line(format!("{r} = {e};"));
                    self.depth -= 1;
                }
                self.line("}".into());
                Ok((r, ty))
            }
            NodeKind::Repeat { count, body } => {
                let gt = self.glsl_ty(g, &ty)?;
                let r = self.fresh("_t");
                self.line(format!("{gt} {r};"));
                self.repeat(g, count, body, Some((&r, &ty)))?;
                Ok((r, ty))
            }
            NodeKind::Apply { list, var, body } => {
                let gt = self.glsl_ty(g, &ty)?;
                let (l, lt) = self.expr(list)?;
                let TypeTerm::List(n, _) = &lt else {
                    return Err(CodegenError::UnsupportedType {
                        label: self.label(g),
                        ty: lt,
                    });
                };
                let elem_var = self.graph().var(var).expect("apply variable in graph");
                let et = self.ty_of(elem_var);
                let lt_elem = lt.elem().expect("list type").clone();
                // array uniforms are indexed in place
                let src = if glsl_type(&lt).is_some() {
                    self.temp(&l, &lt).map_err(CodegenError::Emitter)?
                } else {
                    l
                };
                let r = self.fresh("_t");
                let out_elem = ty.elem().expect("list type").clone();
                self.line(format!("{gt} {r};"));
                let ev = self.var_ident(elem_var);
                for k in 0..*n {
                    self.line("{".into());
                    self.depth += 1;
                    let item = self.cast(elem_var, &format!("{src}[{k}]"), &lt_elem, &et)?;
                    self.line(format!("{ev} = {item};"));
                    let (e, t) = self.expr(body)?;
                    let e = self.cast(g, &e, &t, &out_elem)?;
                    self.line(format!("{r}[{k}] = {e};"));
                    self.depth -= 1;
                    self.line("}".into());
                }
                Ok((r, ty))
            }
            NodeKind::Index { base, index } => {
                let (b, bt) = self.expr(base)?;
                let (_, it) = self.expr(index)?;
                let TypeTerm::List(n, elem) = &bt else {
                    return Err(CodegenError::UnsupportedType {
                        label: self.label(g),
                        ty: bt,
                    });
                };
                let TypeTerm::ConstInt(k) = it else {
                    return Err(CodegenError::NonConstant(index.to_source()));
                };
                if k < 1 || k as u32 > *n {
                    return Err(CodegenError::Emitter(format!("index {k} out of range for {bt}")));
                }
                let e = self.cast(g, &format!("{b}[{}]", k - 1), elem, &ty)?;
                Ok((e, ty))
            }
            NodeKind::Number(_) | NodeKind::Bool(_) | NodeKind::Str(_) | NodeKind::FunDef { .. } => {
                Err(CodegenError::Emitter(format!("unexpected `{}` in shader code", node.to_source())))
            }
            NodeKind::Assign { .. } | NodeKind::Seq(_) => unreachable!(),
        }
    }

    fn var_ref(&mut self, g: usize, node: &Node) -> Result<(String, TypeTerm), CodegenError> {
        let gn = &self.graph().nodes[g];
        if let GKind::Var {
            binder: Some(Binder::Counter(r)),
            ..
        } = gn.kind
        {
            let name = self.counters.get(&r).ok_or_else(|| CodegenError::Input(gn.label.clone()))?;
            return Ok((name.clone(), TypeTerm::Int));
        }
        if !self.in_d(g) {
            return self.u_ref(g, node);
        }
        Ok((self.var_ident(g), self.ty_of(g)))
    }

    fn call(&mut self, g: usize, name: &str, args: &[Node], ty: &TypeTerm) -> Result<(String, TypeTerm), CodegenError> {
        let texture = match &self.graph().nodes[g].kind {
            GKind::Call { texture, .. } => texture.clone(),
            _ => None,
        };
        let value_args = if texture.is_some() { &args[1..] } else { args };
        let mut exprs = Vec::new();
        let mut types = Vec::new();
        for a in value_args {
            let (e, t) = self.expr(a)?;
            exprs.push(e);
            types.push(t);
        }
        let sig = min_sign(name, &types)
            .map_err(|e| CodegenError::Emitter(e.to_string()))?
            .ok_or_else(|| CodegenError::NoOverload {
                name: name.to_string(),
                args: types.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", "),
            })?;
        let mut cast_args = Vec::new();
        for ((e, t), p) in exprs.iter().zip(&types).zip(&sig.params) {
            cast_args.push(self.cast(g, e, t, p)?);
        }
        let e = match texture {
            Some(tex) => self.sample(&tex, &cast_args[0]),
            None => self.emit_builtin(&sig, &cast_args)?,
        };
        let e = self.cast(g, &e, &sig.ret, ty)?;
        Ok((e, ty.clone()))
    }

    fn emit_builtin(&mut self, sig: &Signature, args: &[String]) -> Result<String, CodegenError> {
        let overload = registry().overload(sig);
        (overload.glsl)(self, args, sig).map_err(CodegenError::Emitter)
    }

    fn sample(&mut self, texture: &str, coord: &str) -> String {
        let k = match self.textures.iter().position(|t| t.name == texture) {
            Some(k) => k,
            None => {
                let k = self.textures.len();
                self.textures.push(TextureSpec {
                    name: texture.to_string(),
                    sampler: format!("_s{k}"),
                    frame: format!("_s{k}_frame"),
                });
                k
            }
        };
        let t = &self.textures[k];
        format!(
            "texture2D({s}, ({coord} - {f}.xy) / ({f}.zw - {f}.xy)).rgb",
            s = t.sampler,
            f = t.frame
        )
    }

    fn output(&mut self, n: usize, e: &str, t: &TypeTerm) -> Result<String, CodegenError> {
        let bad = || CodegenError::UnsupportedType {
            label: self.label(n),
            ty: t.clone(),
        };
        Ok(match t {
            TypeTerm::Bool | TypeTerm::Int | TypeTerm::ConstInt(_) | TypeTerm::Real => {
                format!("vec4(vec3(float({e})), 1.0)")
            }
            TypeTerm::List(3, el) if scalar_rank(el).is_some_and(|r| r <= 2) => format!("vec4(vec3({e}), 1.0)"),
            TypeTerm::List(4, el) if scalar_rank(el).is_some_and(|r| r <= 2) => format!("vec4({e})"),
            _ => return Err(bad()),
        })
    }
}

fn push_helper(name: &'static str, seen: &mut BTreeSet<&'static str>, out: &mut String) {
    if !seen.insert(name) {
        return;
    }
    let (src, deps) = glsl_helper(name).expect("known helper");
    for d in deps {
        push_helper(d, seen, out);
    }
    out.push_str(src);
}

/// Generates the fragment shader for a plot.
pub fn generate(input: &CodegenInput) -> Result<ShaderArtifact, CodegenError> {
    let mut gen = Gen {
        input,
        lines: Vec::new(),
        depth: 1,
        temps: 0,
        helpers: BTreeSet::new(),
        uniforms: Vec::new(),
        uniform_of: HashMap::new(),
        uniform_by_source: HashMap::new(),
        textures: Vec::new(),
        counters: HashMap::new(),
    };
    for &n in &input.split.d {
        let t = gen.ty_of(n);
        if matches!(t, TypeTerm::Top | TypeTerm::Bot) || t.contains_bot() {
            return Err(CodegenError::UnsupportedType {
                label: gen.label(n),
                ty: t,
            });
        }
    }

    let mut decls = Vec::new();
    for &n in &input.split.d {
        let node = &input.graph.nodes[n];
        if !node.is_var() || matches!(node.kind, GKind::Var { binder: Some(Binder::Counter(_)), .. }) {
            continue;
        }
        let t = gen.ty_of(n);
        let gt = gen.glsl_ty(n, &t)?;
        decls.push(format!("  {gt} {} = {gt}(0);", gen.var_ident(n)));
    }
    if let Some(rv) = &input.lowered.running {
        let n = input.graph.var(&rv.name).expect("running variable in graph");
        let id = gen.var_ident(n);
        let init = gen.cast(n, "_p", &rv.ty(), &gen.ty_of(n))?;
        decls.push(format!("  {id} = {init};"));
    }

    let root = input.graph.value_of(&input.lowered.body).expect("root in graph");
    let (e, t) = gen.expr(&input.lowered.body)?;
    let color = gen.output(root, &e, &t)?;
    gen.line(format!("gl_FragColor = clamp({color}, 0.0, 1.0);"));

    let mut src = String::from("precision highp float;\nuniform vec4 _viewport;\nuniform vec2 _resolution;\n");
    for u in &gen.uniforms {
        match u.glsl.strip_suffix(']').and_then(|g| g.split_once('[')) {
            Some((base, n)) => src.push_str(&format!("uniform {base} {}[{n}];\n", u.name)),
            None => src.push_str(&format!("uniform {} {};\n", u.glsl, u.name)),
        }
    }
    for t in &gen.textures {
        src.push_str(&format!("uniform sampler2D {};\nuniform vec4 {};\n", t.sampler, t.frame));
    }
    let mut seen = BTreeSet::new();
    let helpers: Vec<_> = gen.helpers.iter().copied().collect();
    for h in helpers {
        push_helper(h, &mut seen, &mut src);
    }
    src.push_str("void main() {\n");
    src.push_str("  vec2 _p = _viewport.xy + gl_FragCoord.xy / _resolution * (_viewport.zw - _viewport.xy);\n");
    for d in decls {
        src.push_str(&d);
        src.push('\n');
    }
    for l in &gen.lines {
        src.push_str(l);
        src.push('\n');
    }
    src.push_str("}\n");

    Ok(ShaderArtifact {
        glsl: src,
        uniforms: gen.uniforms,
        textures: gen.textures,
        type_key: input.type_key.clone(),
    })
}

/// Running-variable kind as it enters the type key.
pub fn running_tag(kind: Option<RunningKind>) -> &'static str {
    match kind {
        None => "none",
        Some(RunningKind::Point) => "point",
        Some(RunningKind::Pair) => "pair",
        Some(RunningKind::Complex) => "complex",
    }
}
