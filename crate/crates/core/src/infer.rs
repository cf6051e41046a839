//! Type inference as the least fixed point of a monotone transfer function
//! over the analysed nodes, computed by Kleene iteration from `Bot`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::builtins::{min_sign, BuiltinError};
use crate::depgraph::{Binder, GKind, Graph, Split};
use crate::types::TypeTerm;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum InferenceError {
    #[error("at `{label}`: {source}")]
    Builtin { label: String, source: BuiltinError },
    #[error("no fixed point within {0} iterations")]
    NonTermination(usize),
    #[error("type of `{0}` decreased between iterations")]
    NotMonotone(String),
}

/// Everything the transfer function needs.
pub struct Problem<'g> {
    pub graph: &'g Graph,
    pub split: &'g Split,
    /// Type of the running variable.
    pub running_ty: Option<TypeTerm>,
    /// Input type of every `U` node.
    pub inputs: BTreeMap<usize, TypeTerm>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Typing {
    /// Type per graph node; `Bot` outside the analysed set.
    pub gamma: Vec<TypeTerm>,
    /// Applications of the transfer function (sweeps, or node updates for
    /// the worklist solver).
    pub iterations: usize,
    /// `Bot, F¹, F², ...` up to the first repeated state (sweep solver only).
    pub history: Vec<Vec<TypeTerm>>,
}

fn elem_of(t: &TypeTerm) -> TypeTerm {
    match t {
        TypeTerm::Bot => TypeTerm::Bot,
        TypeTerm::List(_, e) => (**e).clone(),
        _ => TypeTerm::Top,
    }
}

impl<'g> Problem<'g> {
    /// Input types from static information only: literal types, with
    /// `ConstInt` for integer literals in constant positions.
    pub fn static_inputs(graph: &Graph, split: &Split, env: &dyn Fn(&str) -> Option<TypeTerm>) -> BTreeMap<usize, TypeTerm> {
        let mut out = BTreeMap::new();
        for &n in &split.u {
            let node = &graph.nodes[n];
            let t = match &node.kind {
                GKind::Literal(TypeTerm::Int) if node.const_position => {
                    match node.label.parse::<i32>() {
                        Ok(v) => TypeTerm::ConstInt(v),
                        Err(_) => TypeTerm::Int,
                    }
                }
                GKind::Literal(t) => t.clone(),
                GKind::Var { .. } => node
                    .var_name()
                    .and_then(env)
                    .unwrap_or(TypeTerm::Top),
                GKind::Call { name, args, .. } if args.is_empty() => min_sign(name, &[])
                    .ok()
                    .flatten()
                    .map_or(TypeTerm::Top, |s| s.ret),
                _ if node.deps.is_empty() => TypeTerm::Top,
                _ => Self::static_type(graph, n, env),
            };
            out.insert(n, t);
        }
        out
    }

    /// Type of `n` computed from the subgraph below it, with leaves typed
    /// statically.
    fn static_type(graph: &Graph, n: usize, env: &dyn Fn(&str) -> Option<TypeTerm>) -> TypeTerm {
        let below = graph.reachable(n);
        let (u, d): (BTreeSet<usize>, BTreeSet<usize>) =
            below.into_iter().partition(|&k| graph.nodes[k].deps.is_empty());
        let split = Split { d, u, running: None };
        let inputs = Self::static_inputs(graph, &split, env);
        match Problem::new(graph, &split, None, inputs).solve() {
            Ok(t) => t.gamma[n].clone(),
            Err(_) => TypeTerm::Top,
        }
    }

    pub fn new(graph: &'g Graph, split: &'g Split, running_ty: Option<TypeTerm>, inputs: BTreeMap<usize, TypeTerm>) -> Problem<'g> {
        Problem {
            graph,
            split,
            running_ty,
            inputs,
        }
    }

    /// The transfer function at node `n`.
    pub fn apply_f(&self, n: usize, gamma: &[TypeTerm]) -> Result<TypeTerm, InferenceError> {
        let g = &gamma[n];
        if self.split.running == Some(n) {
            return Ok(g.join(self.running_ty.as_ref().unwrap_or(&TypeTerm::Top)));
        }
        if self.split.u.contains(&n) {
            return Ok(g.join(self.inputs.get(&n).unwrap_or(&TypeTerm::Top)));
        }
        let node = &self.graph.nodes[n];
        Ok(match &node.kind {
            GKind::Literal(t) => t.clone(),
            GKind::Var { sources, binder } => {
                let mut t = g.clone();
                for &s in sources {
                    t = t.join(&gamma[s]);
                }
                match binder {
                    Some(Binder::Counter(_)) => t.join(&TypeTerm::Int),
                    Some(Binder::Element { list, .. }) => t.join(&elem_of(&gamma[*list])),
                    None => t,
                }
            }
            GKind::Call { name, args, .. } => {
                let types: Vec<TypeTerm> = args.iter().map(|&a| gamma[a].clone()).collect();
                if types.iter().any(TypeTerm::contains_bot) {
                    TypeTerm::Bot
                } else {
                    match min_sign(name, &types) {
                        Ok(Some(sig)) => sig.ret,
                        Ok(None) => TypeTerm::Top,
                        Err(source) => {
                            return Err(InferenceError::Builtin {
                                label: node.label.clone(),
                                source,
                            })
                        }
                    }
                }
            }
            GKind::List(items) => {
                if items.is_empty() {
                    TypeTerm::Top
                } else {
                    let elem = TypeTerm::join_all(items.iter().map(|&i| &gamma[i]));
                    TypeTerm::list(items.len() as u32, elem)
                }
            }
            GKind::If {
                cond,
                then,
                otherwise,
            } => {
                let c = &gamma[*cond];
                if *c == TypeTerm::Bot {
                    TypeTerm::Bot
                } else if !c.is_subtype(&TypeTerm::Bool) {
                    TypeTerm::Top
                } else {
                    match otherwise {
                        Some(e) => gamma[*then].join(&gamma[*e]),
                        None if node.value_used => TypeTerm::Top,
                        None => gamma[*then].clone(),
                    }
                }
            }
            GKind::Repeat { count, body } => {
                let c = &gamma[*count];
                if *c == TypeTerm::Bot {
                    TypeTerm::Bot
                } else if c.is_subtype(&TypeTerm::Int) {
                    gamma[*body].clone()
                } else {
                    TypeTerm::Top
                }
            }
            GKind::Apply { list, body } => match &gamma[*list] {
                TypeTerm::Bot => TypeTerm::Bot,
                TypeTerm::List(len, _) => TypeTerm::list(*len, gamma[*body].clone()),
                _ => TypeTerm::Top,
            },
            GKind::Index { base, index } => {
                let (b, i) = (&gamma[*base], &gamma[*index]);
                if *b == TypeTerm::Bot || *i == TypeTerm::Bot {
                    TypeTerm::Bot
                } else if i.is_subtype(&TypeTerm::Int) {
                    elem_of(b)
                } else {
                    TypeTerm::Top
                }
            }
        })
    }

    /// One full sweep: `F(gamma)` over the analysed nodes.
    pub fn apply_all(&self, gamma: &[TypeTerm]) -> Result<Vec<TypeTerm>, InferenceError> {
        let mut next = gamma.to_vec();
        for n in self.split.extent() {
            next[n] = self.apply_f(n, gamma)?;
        }
        Ok(next)
    }

    fn bound(&self) -> usize {
        let extent = self.split.extent();
        let input_depth = self
            .inputs
            .values()
            .chain(self.running_ty.iter())
            .map(TypeTerm::list_depth)
            .max()
            .unwrap_or(0);
        let built = extent
            .iter()
            .filter(|&&n| matches!(self.graph.nodes[n].kind, GKind::List(_) | GKind::Apply { .. }))
            .count();
        extent.len() * (6 + input_depth + built) + 1
    }

    /// Kleene iteration by full sweeps, recording every intermediate state.
    pub fn solve(&self) -> Result<Typing, InferenceError> {
        let bound = self.bound();
        let mut gamma = vec![TypeTerm::Bot; self.graph.len()];
        let mut history = vec![gamma.clone()];
        let mut iterations = 0;
        loop {
            iterations += 1;
            if iterations > bound {
                return Err(InferenceError::NonTermination(bound));
            }
            let next = self.apply_all(&gamma)?;
            for (k, (old, new)) in gamma.iter().zip(&next).enumerate() {
                if !old.is_subtype(new) {
                    return Err(InferenceError::NotMonotone(self.graph.nodes[k].label.clone()));
                }
            }
            history.push(next.clone());
            if next == gamma {
                return Ok(Typing {
                    gamma,
                    iterations,
                    history,
                });
            }
            gamma = next;
        }
    }

    /// Chaotic iteration with a worklist seeded in `order`. Reaches the same
    /// least fixed point as [`Problem::solve`] for any order.
    pub fn solve_worklist(&self, order: &[usize]) -> Result<Typing, InferenceError> {
        let extent = self.split.extent();
        let bound = self.bound();
        let mut gamma = vec![TypeTerm::Bot; self.graph.len()];
        let mut queue: VecDeque<usize> = order.iter().copied().filter(|n| extent.contains(n)).collect();
        let mut queued: BTreeSet<usize> = queue.iter().copied().collect();
        for n in &extent {
            if queued.insert(*n) {
                queue.push_back(*n);
            }
        }
        let mut changes = 0;
        let mut iterations = 0;
        while let Some(n) = queue.pop_front() {
            queued.remove(&n);
            iterations += 1;
            let new = self.apply_f(n, &gamma)?;
            if new == gamma[n] {
                continue;
            }
            if !gamma[n].is_subtype(&new) {
                return Err(InferenceError::NotMonotone(self.graph.nodes[n].label.clone()));
            }
            changes += 1;
            if changes > bound {
                return Err(InferenceError::NonTermination(bound));
            }
            gamma[n] = new;
            for &p in &self.graph.rdeps[n] {
                if extent.contains(&p) && queued.insert(p) {
                    queue.push_back(p);
                }
            }
            if queued.insert(n) {
                queue.push_back(n);
            }
        }
        Ok(Typing {
            gamma,
            iterations,
            history: Vec::new(),
        })
    }

    /// Whether `gamma` satisfies `F(gamma) ⊑ gamma` on the analysed nodes.
    pub fn is_prefixpoint(&self, gamma: &[TypeTerm]) -> Result<bool, InferenceError> {
        for n in self.split.extent() {
            if !self.apply_f(n, gamma)?.is_subtype(&gamma[n]) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl Typing {
    /// Analysed nodes typed `Top`.
    pub fn top_nodes(&self, split: &Split) -> Vec<usize> {
        split
            .extent()
            .into_iter()
            .filter(|&n| self.gamma[n] == TypeTerm::Top)
            .collect()
    }
}

fn symbol(t: &TypeTerm) -> String {
    match t {
        TypeTerm::Bot => "⊥".into(),
        TypeTerm::Top => "⊤".into(),
        t => t.to_string(),
    }
}

/// Row order for tables: variables by first occurrence, then computed
/// expressions, then leaves, each in source order.
pub fn table_rows(graph: &Graph, split: &Split) -> Vec<usize> {
    let mut rows: Vec<usize> = split.extent().into_iter().collect();
    rows.sort_by_key(|&n| {
        let node = &graph.nodes[n];
        let group = if node.is_var() {
            0
        } else if node.deps.is_empty() {
            2
        } else {
            1
        };
        (group, node.span.start, n)
    });
    rows
}

/// Renders the iteration history as a text table, one row per node and one
/// column per iterate (`⊥`, `F1`, `F2`, ...).
pub fn format_table(graph: &Graph, split: &Split, typing: &Typing) -> String {
    let rows = table_rows(graph, split);
    let mut cells: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["node".to_string(), "⊥".to_string()];
    header.extend((1..typing.history.len()).map(|k| format!("F{k}")));
    cells.push(header);
    for &n in &rows {
        let mut row = vec![graph.nodes[n].label.clone()];
        row.extend(typing.history.iter().map(|g| symbol(&g[n])));
        cells.push(row);
    }
    let cols = cells[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| cells.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::{lower_plot, split_script};
    use crate::parser::parse_source;
    use TypeTerm::*;

    struct Fixture {
        graph: Graph,
        split: Split,
        running: Option<TypeTerm>,
    }

    fn fixture(src: &str) -> Fixture {
        let p = parse_source(src).unwrap();
        let s = split_script(&p).unwrap();
        let l = lower_plot(&s.plots[0].body, &p, &|_| false, &mut p.id_gen()).unwrap();
        let graph = Graph::build(&l.body);
        let (split, running) = match &l.running {
            Some(r) => (Split::for_plot(&graph, graph.var(&r.name).unwrap()), Some(r.ty())),
            None => (Split::whole(&graph), None),
        };
        Fixture { graph, split, running }
    }

    impl Fixture {
        fn problem(&self) -> Problem<'_> {
            let inputs = Problem::static_inputs(&self.graph, &self.split, &|_| None);
            Problem::new(&self.graph, &self.split, self.running.clone(), inputs)
        }

        fn type_of(&self, t: &Typing, label: &str) -> TypeTerm {
            let n = self.graph.nodes.iter().position(|n| n.label == label).unwrap();
            t.gamma[n].clone()
        }
    }

    #[test]
    fn iteration_table() {
        let f = fixture("a = -2; b = sqrt(a); a = b + 1;");
        let t = f.problem().solve().unwrap();
        assert_eq!(t.history.len(), 8);
        let table = format_table(&f.graph, &f.split, &t);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[1].split_whitespace().collect::<Vec<_>>(), ["a", "⊥", "⊥", "int", "int", "int", "int", "complex", "complex"]);
        assert_eq!(lines[2].split_whitespace().collect::<Vec<_>>(), ["b", "⊥", "⊥", "⊥", "⊥", "complex", "complex", "complex", "complex"]);
        assert_eq!(lines[3].split_whitespace().next(), Some("sqrt(a)"));
        assert_eq!(lines[5].split_whitespace().next(), Some("-2"));
    }

    #[test]
    fn worklist_agrees_with_sweeps() {
        let f = fixture("a = -2; b = sqrt(a); a = b + 1;");
        let p = f.problem();
        let sweep = p.solve().unwrap();
        let mut order: Vec<usize> = f.split.extent().into_iter().collect();
        order.reverse();
        assert_eq!(p.solve_worklist(&order).unwrap().gamma, sweep.gamma);
    }

    #[test]
    fn wave_types() {
        let f = fixture("1/2+1/2*sin(|#|-seconds())");
        let t = f.problem().solve().unwrap();
        assert_eq!(f.type_of(&t, "#"), TypeTerm::list(2, Real));
        assert_eq!(f.type_of(&t, "|#|"), Real);
        assert_eq!(f.type_of(&t, "1/2+1/2*sin(|#|-seconds())"), Real);
    }

    #[test]
    fn heterogeneous_if_is_top() {
        let p = parse_source("if(booleanexp, 12, [0])").unwrap();
        let s = split_script(&p).unwrap();
        let l = lower_plot(&s.plots[0].body, &p, &|n| n == "booleanexp", &mut p.id_gen()).unwrap();
        let graph = Graph::build(&l.body);
        let split = Split::whole(&graph);
        let inputs = Problem::static_inputs(&graph, &split, &|n| (n == "booleanexp").then_some(Bool));
        let t = Problem::new(&graph, &split, None, inputs).solve().unwrap();
        assert_eq!(t.gamma[graph.root], Top);
    }

    #[test]
    fn loops_and_lists() {
        let f = fixture("s = 0; repeat(3, s = s + # * z); [s, s]");
        let t = f.problem().solve().unwrap();
        assert_eq!(f.type_of(&t, "s"), Complex);
        assert_eq!(f.type_of(&t, "[s, s]"), TypeTerm::list(2, Complex));
        let g = fixture("l = apply([1, 2, 3], v, v * #); l_2");
        let t = g.problem().solve().unwrap();
        assert_eq!(g.type_of(&t, "l_2"), TypeTerm::list(2, Real));
    }

    #[test]
    fn result_is_a_prefixpoint() {
        let f = fixture("x^2 + y^2 < 1");
        let p = f.problem();
        let t = p.solve().unwrap();
        assert!(p.is_prefixpoint(&t.gamma).unwrap());
        assert_eq!(t.gamma[f.graph.root], Bool);
    }

    #[test]
    fn arity_errors_surface() {
        let f = fixture("sin(#, #)");
        assert!(matches!(f.problem().solve(), Err(InferenceError::Builtin { .. })));
    }
}
