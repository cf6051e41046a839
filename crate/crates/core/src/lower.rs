//! Prepares a plot expression for analysis: splits a program into CPU setup
//! and `colorplot` bodies, inlines user functions, gives every loop and
//! `apply` binder a unique name and identifies the running variable.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{is_builtin_constant, IdGen, Node, NodeId, NodeKind, Number, Program, Span};
use crate::builtins::registry;
use crate::types::TypeTerm;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LowerError {
    #[error("cannot tell which of {0:?} varies per pixel")]
    AmbiguousRunningVariable(Vec<String>),
    #[error("unknown function `{name}` with {arity} arguments")]
    UnknownFunction { name: String, arity: usize },
    #[error("`colorplot` must be a top-level statement")]
    NestedColorplot(Span),
    #[error("`colorplot` takes an expression, optionally preceded by a texture name")]
    BadColorplot(Span),
}

/// One `colorplot` statement.
#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    /// Texture written by the plot; `None` renders to the output image.
    pub target: Option<String>,
    pub body: Node,
    pub id: NodeId,
}

/// A program split into CPU setup statements and plots, in source order.
#[derive(Clone, Debug, PartialEq)]
pub struct Script {
    pub setup: Vec<Node>,
    pub plots: Vec<Plot>,
}

/// Splits `program` into setup and plots. A program without `colorplot`
/// is one plot whose body is the whole program.
pub fn split_script(program: &Program) -> Result<Script, LowerError> {
    let mut setup = Vec::new();
    let mut plots = Vec::new();
    for stmt in &program.statements {
        if let NodeKind::FunDef { .. } = stmt.kind {
            continue;
        }
        if let NodeKind::Call { name, args } = &stmt.kind {
            if name == "colorplot" {
                let plot = match args.as_slice() {
                    [body] => Plot {
                        target: None,
                        body: body.clone(),
                        id: stmt.id,
                    },
                    [Node {
                        kind: NodeKind::Str(t),
                        ..
                    }, body] => Plot {
                        target: Some(t.clone()),
                        body: body.clone(),
                        id: stmt.id,
                    },
                    _ => return Err(LowerError::BadColorplot(stmt.span)),
                };
                check_no_colorplot(&plot.body)?;
                plots.push(plot);
                continue;
            }
        }
        check_no_colorplot(stmt)?;
        setup.push(stmt.clone());
    }
    if plots.is_empty() {
        let body = program.as_body();
        return Ok(Script {
            setup: Vec::new(),
            plots: vec![Plot {
                target: None,
                id: body.id,
                body,
            }],
        });
    }
    Ok(Script { setup, plots })
}

fn check_no_colorplot(node: &Node) -> Result<(), LowerError> {
    let mut found = None;
    node.walk(&mut |n| {
        if found.is_none() && n.is_call("colorplot") {
            found = Some(n.span);
        }
    });
    match found {
        Some(span) => Err(LowerError::NestedColorplot(span)),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunningKind {
    /// A point variable such as `#` or `P`, a list of two reals.
    Point,
    /// Separate `x` and `y`, packed into one point variable.
    Pair,
    /// `z`, the pixel as a complex number.
    Complex,
}

/// The variable that varies per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningVar {
    /// Name inside the lowered body.
    pub name: String,
    pub kind: RunningKind,
}

impl RunningVar {
    pub fn ty(&self) -> TypeTerm {
        match self.kind {
            RunningKind::Complex => TypeTerm::Complex,
            _ => TypeTerm::list(2, TypeTerm::Real),
        }
    }

    /// Source-level names the interpreter binds for this variable.
    pub fn source_names(&self) -> Vec<&str> {
        match self.kind {
            RunningKind::Pair => vec!["x", "y"],
            _ => vec![self.name.as_str()],
        }
    }
}

/// Synthetic point variable standing for the pair `x`, `y`.
pub const PAIR_VAR: &str = "@xy";

/// A lowered plot body.
#[derive(Clone, Debug, PartialEq)]
pub struct Lowered {
    pub body: Node,
    pub running: Option<RunningVar>,
    /// Renamed `repeat` counters and `apply` variables, mapped to their binder.
    pub binders: BTreeMap<String, NodeId>,
    /// Names read but neither assigned nor bound in the body.
    pub free: BTreeSet<String>,
}

/// Lowers a plot body. `is_bound` tells which free names are provided by the
/// environment; of the rest, one may become the running variable.
pub fn lower_plot(
    body: &Node,
    program: &Program,
    is_bound: &dyn Fn(&str) -> bool,
    ids: &mut IdGen,
) -> Result<Lowered, LowerError> {
    let mut body = body.clone();
    inline_calls(&mut body, program, ids)?;
    let mut binders = BTreeMap::new();
    rename_binders(&mut body, &mut Vec::new(), &mut binders);
    let free = free_names(&body, &binders);
    let open: Vec<String> = free.iter().filter(|n| !is_bound(n)).cloned().collect();
    let running = match open.as_slice() {
        [] => None,
        [v] if v == "z" => Some(RunningVar {
            name: v.clone(),
            kind: RunningKind::Complex,
        }),
        names if names.iter().all(|n| n == "x" || n == "y") => {
            body = unpack_pair(body, ids);
            Some(RunningVar {
                name: PAIR_VAR.to_string(),
                kind: RunningKind::Pair,
            })
        }
        [v] => Some(RunningVar {
            name: v.clone(),
            kind: RunningKind::Point,
        }),
        names => return Err(LowerError::AmbiguousRunningVariable(names.to_vec())),
    };
    Ok(Lowered {
        body,
        running,
        binders,
        free,
    })
}

fn inline_calls(node: &mut Node, program: &Program, ids: &mut IdGen) -> Result<(), LowerError> {
    for c in node.children_mut() {
        inline_calls(c, program, ids)?;
    }
    let NodeKind::Call { name, args } = &mut node.kind else {
        return Ok(());
    };
    let Some(f) = program.function(name, args.len()) else {
        if registry().get(name).is_none() {
            return Err(LowerError::UnknownFunction {
                name: name.clone(),
                arity: args.len(),
            });
        }
        return Ok(());
    };
    let suffix = format!("@{}", node.id.0);
    let mut renames: Vec<(String, String)> = f
        .params
        .iter()
        .cloned()
        .chain(f.locals())
        .map(|n| {
            let new = format!("{n}{suffix}");
            (n, new)
        })
        .collect();
    let mut copy = ids.recopy(&f.body);
    rename_vars(&mut copy, &mut renames);
    inline_calls(&mut copy, program, ids)?;
    let span = node.span;
    let mut items: Vec<Node> = std::mem::take(args)
        .into_iter()
        .zip(&f.params)
        .map(|(arg, p)| {
            Node::new(
                ids.fresh(),
                NodeKind::Assign {
                    target: format!("{p}{suffix}"),
                    value: Box::new(arg),
                },
                span,
            )
        })
        .collect();
    items.push(copy);
    node.kind = NodeKind::Seq(items);
    Ok(())
}

/// Renames free occurrences of names according to `renames` (innermost last).
fn rename_vars(node: &mut Node, renames: &mut Vec<(String, String)>) {
    fn lookup(renames: &[(String, String)], name: &str) -> Option<String> {
        renames.iter().rev().find(|(o, _)| o == name).map(|(_, n)| n.clone())
    }
    match &mut node.kind {
        NodeKind::Var(n) => {
            if let Some(new) = lookup(renames, n) {
                *n = new;
            }
        }
        NodeKind::Assign { target, value } => {
            rename_vars(value, renames);
            if let Some(new) = lookup(renames, target) {
                *target = new;
            }
        }
        NodeKind::Repeat { count, body } => {
            rename_vars(count, renames);
            // `#` inside is the counter, not an outer variable.
            renames.push(("#".into(), "#".into()));
            rename_vars(body, renames);
            renames.pop();
        }
        NodeKind::Apply { list, var, body } => {
            rename_vars(list, renames);
            renames.push((var.clone(), var.clone()));
            rename_vars(body, renames);
            renames.pop();
        }
        _ => {
            for c in node.children_mut() {
                rename_vars(c, renames);
            }
        }
    }
}

fn rename_binders(node: &mut Node, scope: &mut Vec<(String, String)>, binders: &mut BTreeMap<String, NodeId>) {
    let id = node.id;
    match &mut node.kind {
        NodeKind::Repeat { count, body } => {
            rename_binders(count, scope, binders);
            let new = format!("#@{}", id.0);
            binders.insert(new.clone(), id);
            scope.push(("#".into(), new));
            rename_binders(body, scope, binders);
            scope.pop();
        }
        NodeKind::Apply { list, var, body } => {
            rename_binders(list, scope, binders);
            let new = format!("{var}@{}", id.0);
            binders.insert(new.clone(), id);
            scope.push((var.clone(), new.clone()));
            rename_binders(body, scope, binders);
            scope.pop();
            *var = new;
        }
        _ => {
            let renames = scope.clone();
            match &mut node.kind {
                NodeKind::Var(n) => {
                    if let Some((_, new)) = renames.iter().rev().find(|(o, _)| o == n) {
                        *n = new.clone();
                    }
                }
                NodeKind::Assign { target, .. } => {
                    if let Some((_, new)) = renames.iter().rev().find(|(o, _)| o == target) {
                        *target = new.clone();
                    }
                }
                _ => {}
            }
            for c in node.children_mut() {
                rename_binders(c, scope, binders);
            }
        }
    }
}

fn free_names(body: &Node, binders: &BTreeMap<String, NodeId>) -> BTreeSet<String> {
    let mut read = BTreeSet::new();
    let mut assigned = BTreeSet::new();
    body.walk(&mut |n| match &n.kind {
        NodeKind::Var(v) => {
            read.insert(v.clone());
        }
        NodeKind::Assign { target, .. } => {
            assigned.insert(target.clone());
        }
        _ => {}
    });
    read.into_iter()
        .filter(|v| !assigned.contains(v) && !binders.contains_key(v) && !is_builtin_constant(v))
        .collect()
}

fn unpack_pair(body: Node, ids: &mut IdGen) -> Node {
    let span = Span::new(body.span.start, body.span.start);
    let mut items = Vec::new();
    for (k, name) in [(1, "x"), (2, "y")] {
        let base = Node::new(ids.fresh(), NodeKind::Var(PAIR_VAR.into()), span);
        let index = Node::new(ids.fresh(), NodeKind::Number(Number::Int(k)), span);
        let value = Node::new(
            ids.fresh(),
            NodeKind::Index {
                base: Box::new(base),
                index: Box::new(index),
            },
            span,
        );
        items.push(Node::new(
            ids.fresh(),
            NodeKind::Assign {
                target: name.into(),
                value: Box::new(value),
            },
            span,
        ));
    }
    let full = span.to(body.span);
    items.push(body);
    Node::new(ids.fresh(), NodeKind::Seq(items), full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_source;

    fn lower(src: &str, bound: &[&str]) -> Result<Lowered, LowerError> {
        let p = parse_source(src).unwrap();
        let script = split_script(&p).unwrap();
        let mut ids = p.id_gen();
        lower_plot(&script.plots[0].body, &p, &|n| bound.contains(&n), &mut ids)
    }

    #[test]
    fn running_variable_forms() {
        let k = |src: &str| lower(src, &[]).unwrap().running.map(|r| (r.name, r.kind));
        assert_eq!(k("sin(|#|)"), Some(("#".into(), RunningKind::Point)));
        assert_eq!(k("x^2 + y^2"), Some((PAIR_VAR.into(), RunningKind::Pair)));
        assert_eq!(k("x"), Some((PAIR_VAR.into(), RunningKind::Pair)));
        assert_eq!(k("|z|"), Some(("z".into(), RunningKind::Complex)));
        assert_eq!(k("f(P) := P.x; f(Q)"), Some(("Q".into(), RunningKind::Point)));
        assert_eq!(k("1/2"), None);
        assert!(matches!(
            lower("# + z", &[]),
            Err(LowerError::AmbiguousRunningVariable(_))
        ));
        assert_eq!(
            lower("c + z", &["c"]).unwrap().running.map(|r| r.kind),
            Some(RunningKind::Complex)
        );
    }

    #[test]
    fn inlining_renames_parameters_and_locals() {
        let l = lower("f(P) := (x = P.x; x^3); colorplot(f(P + [1, 0]) + x0)", &["x0"]).unwrap();
        let src = l.body.to_source();
        assert!(src.contains("P@"), "{src}");
        assert!(src.contains("x@"), "{src}");
        assert_eq!(l.running.unwrap().name, "P");
        assert!(l.free.contains("x0"));
    }

    #[test]
    fn nested_binders_get_unique_names() {
        let l = lower("repeat(3, s = # + repeat(2, #))", &["s"]).unwrap();
        assert_eq!(l.binders.len(), 2);
        let names: Vec<&String> = l.binders.keys().collect();
        assert_ne!(names[0], names[1]);
        assert!(l.running.is_none());
    }

    #[test]
    fn apply_variable_shadows_parameter() {
        let l = lower("g(d) := apply(d, d, d * 2); g([1, 2]) + P", &[]).unwrap();
        assert_eq!(l.running.unwrap().name, "P");
    }

    #[test]
    fn unknown_function() {
        assert!(matches!(lower("frob(#)", &[]), Err(LowerError::UnknownFunction { .. })));
    }

    #[test]
    fn colorplot_split() {
        let p = parse_source("c = 1; colorplot(\"julia\", z^2 + c); colorplot(|#|)").unwrap();
        let s = split_script(&p).unwrap();
        assert_eq!(s.setup.len(), 1);
        assert_eq!(s.plots.len(), 2);
        assert_eq!(s.plots[0].target.as_deref(), Some("julia"));
        let nested = parse_source("a = colorplot(1)").unwrap();
        assert!(matches!(split_script(&nested), Err(LowerError::NestedColorplot(_))));
    }
}
