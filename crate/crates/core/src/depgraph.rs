//! Dependency graph of a lowered plot body and its split into the
//! pixel-dependent part `D` and the uniform inputs `U`.
//!
//! Graph nodes are expression nodes (literals, calls, lists, `if`, `repeat`,
//! `apply`, indexing) and one node per variable name. Variable reads,
//! assignments and sequences are aliases: a read is the variable's node, an
//! assignment adds an edge from the variable to its right-hand side and a
//! sequence stands for its last element. Edges point from a node to the nodes
//! its value depends on.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::ast::{Node, NodeId, NodeKind, Number, Span};
use crate::builtins::takes_texture_name;
use crate::types::TypeTerm;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRef {
    Expr(NodeId),
    Var(String),
}

/// How a binder variable gets its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Binder {
    /// `repeat` counter; the index is the repeat node.
    Counter(usize),
    /// `apply` element variable.
    Element { list: usize, apply: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum GKind {
    /// Literal with its static type.
    Literal(TypeTerm),
    Var {
        /// Right-hand sides of assignments to the variable.
        sources: Vec<usize>,
        binder: Option<Binder>,
    },
    Call {
        name: String,
        args: Vec<usize>,
        texture: Option<String>,
    },
    List(Vec<usize>),
    If {
        cond: usize,
        then: usize,
        otherwise: Option<usize>,
    },
    Repeat {
        count: usize,
        body: usize,
    },
    Apply {
        list: usize,
        body: usize,
    },
    Index {
        base: usize,
        index: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GNode {
    pub key: NodeRef,
    pub kind: GKind,
    pub label: String,
    /// Source position (first occurrence for variables).
    pub span: Span,
    /// Outgoing edges, without duplicates, in insertion order.
    pub deps: Vec<usize>,
    /// Repeat counts, and integer literals used as exponent or index: their
    /// value becomes part of the type.
    pub const_position: bool,
    /// Whether some consumer reads the node's value.
    pub value_used: bool,
}

impl GNode {
    pub fn is_var(&self) -> bool {
        matches!(self.key, NodeRef::Var(_))
    }

    pub fn var_name(&self) -> Option<&str> {
        match &self.key {
            NodeRef::Var(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Graph {
    pub nodes: Vec<GNode>,
    index: HashMap<NodeRef, usize>,
    /// Node standing for the value of the whole body.
    pub root: usize,
    /// Incoming edges.
    pub rdeps: Vec<Vec<usize>>,
}

impl Graph {
    pub fn build(body: &Node) -> Graph {
        let mut b = Builder {
            g: Graph::default(),
            binders: HashMap::new(),
        };
        let root = b.visit(body, true, &mut Vec::new());
        let mut g = b.g;
        g.root = root;
        g.rdeps = vec![Vec::new(); g.nodes.len()];
        for (k, n) in g.nodes.iter().enumerate() {
            for &d in &n.deps {
                g.rdeps[d].push(k);
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, key: &NodeRef) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn expr(&self, id: NodeId) -> Option<usize> {
        self.get(&NodeRef::Expr(id))
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.get(&NodeRef::Var(name.to_string()))
    }

    /// Graph node carrying the value of AST node `node`, following aliases.
    pub fn value_of(&self, node: &Node) -> Option<usize> {
        match &node.kind {
            NodeKind::Var(n) => self.var(n),
            NodeKind::Assign { target, .. } => self.var(target),
            NodeKind::Seq(items) => items.last().and_then(|l| self.value_of(l)),
            _ => self.expr(node.id),
        }
    }

    /// Nodes with a path to `target`, including `target`.
    pub fn reaching(&self, target: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([target]);
        let mut queue = VecDeque::from([target]);
        while let Some(n) = queue.pop_front() {
            for &p in &self.rdeps[n] {
                if seen.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// Nodes reachable from `from`, including `from`.
    pub fn reachable(&self, from: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            for &d in &self.nodes[n].deps {
                if seen.insert(d) {
                    queue.push_back(d);
                }
            }
        }
        seen
    }

    /// Graphviz rendering; `D` nodes orange, `U` nodes blue.
    pub fn to_dot(&self, split: Option<&Split>) -> String {
        let mut out = String::from("digraph deps {\n  node [shape=box, fontname=\"monospace\"];\n");
        for (k, n) in self.nodes.iter().enumerate() {
            let color = match split {
                Some(s) if s.d.contains(&k) => ", style=filled, fillcolor=orange",
                Some(s) if s.u.contains(&k) => ", style=filled, fillcolor=lightblue",
                _ => "",
            };
            let label = n.label.replace('\\', "\\\\").replace('"', "\\\"");
            let _ = writeln!(out, "  n{k} [label=\"{label}\"{color}];");
        }
        for (k, n) in self.nodes.iter().enumerate() {
            for d in &n.deps {
                let _ = writeln!(out, "  n{k} -> n{d};");
            }
        }
        out.push_str("}\n");
        out
    }
}

struct Builder {
    g: Graph,
    binders: HashMap<String, Binder>,
}

impl Builder {
    fn add(&mut self, key: NodeRef, kind: GKind, label: String, span: Span) -> usize {
        let k = self.g.nodes.len();
        self.g.index.insert(key.clone(), k);
        self.g.nodes.push(GNode {
            key,
            kind,
            label,
            span,
            deps: Vec::new(),
            const_position: false,
            value_used: false,
        });
        k
    }

    fn edge(&mut self, from: usize, to: usize) {
        let deps = &mut self.g.nodes[from].deps;
        if !deps.contains(&to) {
            deps.push(to);
        }
    }

    fn var(&mut self, name: &str, span: Span) -> usize {
        let key = NodeRef::Var(name.to_string());
        if let Some(&k) = self.g.index.get(&key) {
            return k;
        }
        let binder = self.binders.get(name).copied();
        let k = self.add(
            key,
            GKind::Var {
                sources: Vec::new(),
                binder,
            },
            name.to_string(),
            span,
        );
        match binder {
            Some(Binder::Counter(r)) => self.edge(k, r),
            Some(Binder::Element { list, apply }) => {
                self.edge(k, list);
                self.edge(k, apply);
            }
            None => {}
        }
        k
    }

    fn expr(&mut self, node: &Node, kind: GKind) -> usize {
        self.add(NodeRef::Expr(node.id), kind, node.to_source(), node.span)
    }

    fn visit(&mut self, node: &Node, used: bool, ctrl: &mut Vec<usize>) -> usize {
        let k = self.visit_inner(node, used, ctrl);
        if used {
            self.g.nodes[k].value_used = true;
        }
        k
    }

    fn visit_inner(&mut self, node: &Node, used: bool, ctrl: &mut Vec<usize>) -> usize {
        match &node.kind {
            NodeKind::Number(Number::Int(_)) => self.expr(node, GKind::Literal(TypeTerm::Int)),
            NodeKind::Number(Number::Real(_)) => self.expr(node, GKind::Literal(TypeTerm::Real)),
            NodeKind::Bool(_) => self.expr(node, GKind::Literal(TypeTerm::Bool)),
            NodeKind::Str(_) | NodeKind::FunDef { .. } => self.expr(node, GKind::Literal(TypeTerm::Top)),
            NodeKind::Var(name) => self.var(name, node.span),
            NodeKind::Assign { target, value } => {
                let r = self.visit(value, true, ctrl);
                let v = self.var(target, node.span);
                if let GKind::Var { sources, .. } = &mut self.g.nodes[v].kind {
                    if !sources.contains(&r) {
                        sources.push(r);
                    }
                }
                self.edge(v, r);
                for &c in ctrl.iter() {
                    self.edge(v, c);
                }
                v
            }
            NodeKind::Seq(items) => {
                let mut last = None;
                for (k, item) in items.iter().enumerate() {
                    last = Some(self.visit(item, used && k + 1 == items.len(), ctrl));
                }
                last.unwrap_or_else(|| self.expr(node, GKind::Literal(TypeTerm::Top)))
            }
            NodeKind::Call { name, args } => {
                let (texture, value_args) = match args.split_first() {
                    Some((
                        Node {
                            kind: NodeKind::Str(t),
                            ..
                        },
                        rest,
                    )) if takes_texture_name(name) => (Some(t.clone()), rest),
                    _ => (None, args.as_slice()),
                };
                let ids: Vec<usize> = value_args.iter().map(|a| self.visit(a, true, ctrl)).collect();
                if name == "^" && ids.len() == 2 && is_int_literal(&value_args[1]) {
                    self.g.nodes[ids[1]].const_position = true;
                }
                let c = self.expr(
                    node,
                    GKind::Call {
                        name: name.clone(),
                        args: ids.clone(),
                        texture,
                    },
                );
                for a in ids {
                    self.edge(c, a);
                }
                c
            }
            NodeKind::List(items) => {
                let ids: Vec<usize> = items.iter().map(|a| self.visit(a, true, ctrl)).collect();
                let l = self.expr(node, GKind::List(ids.clone()));
                for a in ids {
                    self.edge(l, a);
                }
                l
            }
            NodeKind::Index { base, index } => {
                let b = self.visit(base, true, ctrl);
                let i = self.visit(index, true, ctrl);
                if is_int_literal(index) {
                    self.g.nodes[i].const_position = true;
                }
                let x = self.expr(node, GKind::Index { base: b, index: i });
                self.edge(x, b);
                self.edge(x, i);
                x
            }
            NodeKind::If {
                cond,
                then,
                otherwise,
            } => {
                let c = self.visit(cond, true, ctrl);
                let f = self.expr(
                    node,
                    GKind::If {
                        cond: c,
                        then: c,
                        otherwise: None,
                    },
                );
                ctrl.push(c);
                let t = self.visit(then, used, ctrl);
                let e = otherwise.as_ref().map(|o| self.visit(o, used, ctrl));
                ctrl.pop();
                self.g.nodes[f].kind = GKind::If {
                    cond: c,
                    then: t,
                    otherwise: e,
                };
                self.edge(f, c);
                self.edge(f, t);
                if let Some(e) = e {
                    self.edge(f, e);
                }
                f
            }
            NodeKind::Repeat { count, body } => {
                let c = self.visit(count, true, ctrl);
                self.g.nodes[c].const_position = true;
                let r = self.expr(node, GKind::Repeat { count: c, body: c });
                self.binders.insert(format!("#@{}", node.id.0), Binder::Counter(r));
                ctrl.push(c);
                let b = self.visit(body, used, ctrl);
                ctrl.pop();
                self.g.nodes[r].kind = GKind::Repeat { count: c, body: b };
                self.edge(r, c);
                self.edge(r, b);
                r
            }
            NodeKind::Apply { list, var, body } => {
                let l = self.visit(list, true, ctrl);
                let a = self.expr(node, GKind::Apply { list: l, body: l });
                self.binders
                    .insert(var.clone(), Binder::Element { list: l, apply: a });
                let b = self.visit(body, true, ctrl);
                self.g.nodes[a].kind = GKind::Apply { list: l, body: b };
                self.edge(a, l);
                self.edge(a, b);
                a
            }
        }
    }
}

fn is_int_literal(node: &Node) -> bool {
    matches!(node.kind, NodeKind::Number(Number::Int(_)))
}

/// The split of the analysed node set into `D` and `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub d: BTreeSet<usize>,
    pub u: BTreeSet<usize>,
    /// Running variable node, absent in whole-program mode.
    pub running: Option<usize>,
}

impl Split {
    /// `D`: nodes with a path to the running variable. `U`: nodes outside `D`
    /// that a `D` node depends on directly, and the root when the plot's
    /// value does not depend on the running variable.
    pub fn for_plot(graph: &Graph, running: usize) -> Split {
        let d = graph.reaching(running);
        let mut u = BTreeSet::new();
        if !d.contains(&graph.root) {
            u.insert(graph.root);
        }
        for &n in &d {
            for &dep in &graph.nodes[n].deps {
                if !d.contains(&dep) {
                    u.insert(dep);
                }
            }
        }
        Split {
            d,
            u,
            running: Some(running),
        }
    }

    /// Without a running variable every node reachable from the root is
    /// analysed: leaves are inputs, everything else is computed.
    pub fn whole(graph: &Graph) -> Split {
        let all = graph.reachable(graph.root);
        let (u, d) = all
            .into_iter()
            .partition(|&n| graph.nodes[n].deps.is_empty());
        Split { d, u, running: None }
    }

    pub fn extent(&self) -> BTreeSet<usize> {
        self.d.union(&self.u).copied().collect()
    }

    pub fn contains(&self, n: usize) -> bool {
        self.d.contains(&n) || self.u.contains(&n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::{lower_plot, split_script};
    use crate::parser::parse_source;

    fn graph(src: &str, bound: &[&str]) -> (Graph, Option<usize>) {
        let p = parse_source(src).unwrap();
        let s = split_script(&p).unwrap();
        let l = lower_plot(&s.plots[0].body, &p, &|n| bound.contains(&n), &mut p.id_gen()).unwrap();
        let g = Graph::build(&l.body);
        let r = l.running.and_then(|r| g.var(&r.name));
        (g, r)
    }

    fn labels(g: &Graph, set: &BTreeSet<usize>) -> BTreeSet<String> {
        set.iter().map(|&n| g.nodes[n].label.clone()).collect()
    }

    #[test]
    fn wave_split() {
        let (g, r) = graph("1/2+1/2*sin(|#|-seconds())", &[]);
        assert_eq!(g.len(), 13);
        let s = Split::for_plot(&g, r.unwrap());
        assert_eq!(
            labels(&g, &s.d),
            BTreeSet::from(
                ["#", "|#|", "|#|-seconds()", "sin(|#|-seconds())", "1/2*sin(|#|-seconds())", "1/2+1/2*sin(|#|-seconds())"]
                    .map(String::from)
            )
        );
        assert_eq!(s.u.len(), 3);
        assert_eq!(labels(&g, &s.u), BTreeSet::from(["1/2", "seconds()"].map(String::from)));
        assert!(s.d.contains(&g.root));
    }

    #[test]
    fn assignments_are_aliases() {
        let (g, _) = graph("a = -2; b = sqrt(a); a = b + 1;", &[]);
        let names: Vec<&str> = g.nodes.iter().map(|n| n.label.as_str()).collect();
        assert_eq!(names.len(), 6, "{names:?}");
        let a = g.var("a").unwrap();
        assert_eq!(g.nodes[a].deps.len(), 2);
        let s = Split::whole(&g);
        assert_eq!(labels(&g, &s.u), BTreeSet::from(["-2", "1"].map(String::from)));
        assert_eq!(s.d.len(), 4);
    }

    #[test]
    fn conditional_assignment_depends_on_condition() {
        let (g, r) = graph("s = 0; if(x > 0, s = 1); s", &[]);
        let s = g.var("s").unwrap();
        let cond = g.nodes.iter().position(|n| n.label == "x>0").unwrap();
        assert!(g.nodes[s].deps.contains(&cond));
        let split = Split::for_plot(&g, r.unwrap());
        assert!(split.d.contains(&s));
    }

    #[test]
    fn constant_positions() {
        let (g, _) = graph("repeat(n, x^2 + l_3)", &["n", "x", "l"]);
        for label in ["n", "2", "3"] {
            let k = g.nodes.iter().position(|n| n.label == label).unwrap();
            assert!(g.nodes[k].const_position, "{label}");
        }
    }

    #[test]
    fn texture_name_is_not_a_node() {
        let (g, r) = graph("imagergb(\"julia\", z^2 + c)", &["c"]);
        assert!(g.nodes.iter().all(|n| !n.label.starts_with('"')));
        let call = &g.nodes[g.root];
        assert!(matches!(&call.kind, GKind::Call { texture: Some(t), args, .. } if t == "julia" && args.len() == 1));
        let s = Split::for_plot(&g, r.unwrap());
        assert!(s.d.contains(&g.root));
    }

    #[test]
    fn binders_depend_on_their_source() {
        let (g, r) = graph("apply(l, d, d + #)", &["l"]);
        let d = g.nodes.iter().position(|n| n.label.starts_with("d@")).unwrap();
        let l = g.var("l").unwrap();
        assert!(g.nodes[d].deps.contains(&l));
        let s = Split::for_plot(&g, r.unwrap());
        assert!(s.u.contains(&l));
    }

    #[test]
    fn dot_output_marks_sets() {
        let (g, r) = graph("sin(#)", &[]);
        let s = Split::for_plot(&g, r.unwrap());
        let dot = g.to_dot(Some(&s));
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("orange"));
    }
}
