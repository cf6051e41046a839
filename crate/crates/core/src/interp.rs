//! Reference interpreter working directly on the source tree.
//!
//! Variables are dynamically typed. A user function call gets its own frame
//! holding the parameters and every name assigned in the body; other names
//! resolve to globals. `repeat` and `apply` bind their variable in a frame
//! that is transparent to assignments of other names.

use std::collections::HashMap;

use crate::ast::{Node, NodeKind, Number, Program};
use crate::builtins::{self, takes_texture_name, BuiltinError, CallCtx, Host};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("undefined variable `{0}`")]
    Undefined(String),
    #[error("local variable `{0}` read before assignment")]
    UnassignedLocal(String),
    #[error("unknown function `{0}` with {1} arguments")]
    UnknownFunction(String, usize),
    #[error(transparent)]
    Builtin(#[from] BuiltinError),
    #[error("{0}")]
    RuntimeTypeError(String),
    #[error("index {index} out of range for a list of length {len}")]
    IndexOutOfRange { index: i64, len: usize },
    #[error("cannot display a value of type {0}")]
    BadOutputType(String),
}

fn type_error(msg: impl Into<String>) -> EvalError {
    EvalError::RuntimeTypeError(msg.into())
}

/// Value of a builtin constant such as `pi`.
pub fn builtin_constant(name: &str) -> Option<Value> {
    match name {
        "pi" => Some(Value::Real(std::f64::consts::PI)),
        "i" => Some(Value::complex(0.0, 1.0)),
        _ => None,
    }
}

struct Frame {
    vars: HashMap<String, Option<Value>>,
    /// Function frames hide the frames below them.
    barrier: bool,
}

pub struct Evaluator<'a> {
    program: &'a Program,
    globals: &'a HashMap<String, Value>,
    host: &'a dyn Host,
    /// Top-level assignments made during this evaluation.
    pub top: HashMap<String, Value>,
    frames: Vec<Frame>,
}

impl<'a> Evaluator<'a> {
    pub fn new(program: &'a Program, globals: &'a HashMap<String, Value>, host: &'a dyn Host) -> Evaluator<'a> {
        Evaluator {
            program,
            globals,
            host,
            top: HashMap::new(),
            frames: Vec::new(),
        }
    }

    /// Binds `name` at top level, shadowing any global of that name.
    pub fn bind(&mut self, name: &str, value: Value) {
        self.top.insert(name.to_string(), value);
    }

    fn lookup(&self, name: &str) -> Result<Value, EvalError> {
        for f in self.frames.iter().rev() {
            if let Some(slot) = f.vars.get(name) {
                return slot.clone().ok_or_else(|| EvalError::UnassignedLocal(name.to_string()));
            }
            if f.barrier {
                break;
            }
        }
        if let Some(v) = self.top.get(name).or_else(|| self.globals.get(name)) {
            return Ok(v.clone());
        }
        builtin_constant(name).ok_or_else(|| EvalError::Undefined(name.to_string()))
    }

    fn assign(&mut self, name: &str, value: Value) {
        for f in self.frames.iter_mut().rev() {
            if let Some(slot) = f.vars.get_mut(name) {
                *slot = Some(value);
                return;
            }
            if f.barrier {
                break;
            }
        }
        self.top.insert(name.to_string(), value);
    }

    fn with_binding<T>(&mut self, name: &str, value: Value, f: impl FnOnce(&mut Self) -> T) -> T {
        self.frames.push(Frame {
            vars: HashMap::from([(name.to_string(), Some(value))]),
            barrier: false,
        });
        let out = f(self);
        self.frames.pop();
        out
    }

    /// Evaluates `node` for its effects, allowing `if` without `else`.
    pub fn exec(&mut self, node: &Node) -> Result<(), EvalError> {
        match &node.kind {
            NodeKind::FunDef { .. } => Ok(()),
            NodeKind::Seq(items) => items.iter().try_for_each(|i| self.exec(i)),
            NodeKind::If {
                cond,
                then,
                otherwise,
            } => {
                if self.condition(cond)? {
                    self.exec(then)
                } else if let Some(o) = otherwise {
                    self.exec(o)
                } else {
                    Ok(())
                }
            }
            _ => self.eval(node).map(drop),
        }
    }

    fn condition(&mut self, cond: &Node) -> Result<bool, EvalError> {
        match self.eval(cond)? {
            Value::Bool(b) => Ok(b),
            v => Err(type_error(format!("condition must be a boolean, got {v}"))),
        }
    }

    pub fn eval(&mut self, node: &Node) -> Result<Value, EvalError> {
        match &node.kind {
            NodeKind::Number(Number::Int(v)) => Ok(Value::Int(*v)),
            NodeKind::Number(Number::Real(v)) => Ok(Value::Real(*v)),
            NodeKind::Bool(b) => Ok(Value::Bool(*b)),
            NodeKind::Str(s) => Err(type_error(format!("string \"{s}\" is not a value"))),
            NodeKind::Var(name) => self.lookup(name),
            NodeKind::Assign { target, value } => {
                let v = self.eval(value)?;
                self.assign(target, v.clone());
                Ok(v)
            }
            NodeKind::FunDef { name, .. } => Err(type_error(format!("definition of `{name}` is not a value"))),
            NodeKind::Seq(items) => {
                let Some((last, rest)) = items.split_last() else {
                    return Err(type_error("empty sequence"));
                };
                for i in rest {
                    self.exec(i)?;
                }
                self.eval(last)
            }
            NodeKind::List(items) => {
                let vs = items.iter().map(|i| self.eval(i)).collect::<Result<Vec<_>, _>>()?;
                Ok(list_value(vs))
            }
            NodeKind::If {
                cond,
                then,
                otherwise,
            } => {
                if self.condition(cond)? {
                    self.eval(then)
                } else if let Some(o) = otherwise {
                    self.eval(o)
                } else {
                    Err(type_error("`if` without `else` has no value when its condition is false"))
                }
            }
            NodeKind::Repeat { count, body } => {
                let n = match self.eval(count)? {
                    Value::Int(n) => n,
                    v => return Err(type_error(format!("repeat count must be an integer, got {v}"))),
                };
                if n < 1 {
                    return Err(type_error(format!("repeat count must be at least 1, got {n}")));
                }
                let mut last = None;
                for k in 1..=n {
                    last = Some(self.with_binding("#", Value::Int(k), |s| s.eval(body))?);
                }
                Ok(last.expect("at least one iteration"))
            }
            NodeKind::Apply { list, var, body } => {
                let items = match self.eval(list)? {
                    Value::List(items) => items,
                    v => return Err(type_error(format!("apply needs a list, got {v}"))),
                };
                let out = items
                    .into_iter()
                    .map(|item| self.with_binding(var, item, |s| s.eval(body)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(list_value(out))
            }
            NodeKind::Index { base, index } => {
                let b = self.eval(base)?;
                let i = self.eval(index)?;
                let Value::List(items) = b else {
                    return Err(type_error(format!("cannot index {b}")));
                };
                let Value::Int(k) = i else {
                    return Err(type_error(format!("index must be an integer, got {i}")));
                };
                if k < 1 || k as usize > items.len() {
                    return Err(EvalError::IndexOutOfRange {
                        index: k as i64,
                        len: items.len(),
                    });
                }
                Ok(items[k as usize - 1].clone())
            }
            NodeKind::Call { name, args } => self.call(name, args),
        }
    }

    fn call(&mut self, name: &str, args: &[Node]) -> Result<Value, EvalError> {
        if let Some(f) = self.program.function(name, args.len()) {
            let values = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
            let mut vars: HashMap<String, Option<Value>> = f.locals().into_iter().map(|l| (l, None)).collect();
            for (p, v) in f.params.iter().zip(values) {
                vars.insert(p.clone(), Some(v));
            }
            self.frames.push(Frame { vars, barrier: true });
            let out = self.eval(&f.body);
            self.frames.pop();
            return out;
        }
        if builtins::registry().get(name).is_none() {
            return Err(EvalError::UnknownFunction(name.to_string(), args.len()));
        }
        let (texture, value_args) = match args.split_first() {
            Some((
                Node {
                    kind: NodeKind::Str(t),
                    ..
                },
                rest,
            )) if takes_texture_name(name) => (Some(t.as_str()), rest),
            _ => (None, args),
        };
        let values = value_args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
        let ctx = CallCtx {
            host: self.host,
            texture,
        };
        call_builtin(name, &ctx, &values)
    }
}

fn list_value(items: Vec<Value>) -> Value {
    let raw = items.clone();
    Value::homogeneous_list(items).unwrap_or(Value::List(raw))
}

/// Builtin call with elementwise fallback for arithmetic on nested lists.
pub fn call_builtin(name: &str, ctx: &CallCtx, args: &[Value]) -> Result<Value, EvalError> {
    let types: Vec<_> = args.iter().map(Value::type_of).collect();
    if builtins::min_sign(name, &types)?.is_some() {
        return Ok(builtins::call_cpu(name, ctx, args)?);
    }
    let broadcast = matches!(name, "+" | "-" | "*" | "/" | "neg");
    match args {
        [Value::List(xs)] if broadcast => Ok(list_value(
            xs.iter()
                .map(|x| call_builtin(name, ctx, std::slice::from_ref(x)))
                .collect::<Result<_, _>>()?,
        )),
        [Value::List(xs), Value::List(ys)] if matches!(name, "+" | "-") && xs.len() == ys.len() => {
            Ok(list_value(
                xs.iter()
                    .zip(ys)
                    .map(|(x, y)| call_builtin(name, ctx, &[x.clone(), y.clone()]))
                    .collect::<Result<_, _>>()?,
            ))
        }
        [Value::List(xs), s] if broadcast && !matches!(s, Value::List(_)) => Ok(list_value(
            xs.iter()
                .map(|x| call_builtin(name, ctx, &[x.clone(), s.clone()]))
                .collect::<Result<_, _>>()?,
        )),
        [s, Value::List(ys)] if broadcast && name != "/" && !matches!(s, Value::List(_)) => Ok(list_value(
            ys.iter()
                .map(|y| call_builtin(name, ctx, &[s.clone(), y.clone()]))
                .collect::<Result<_, _>>()?,
        )),
        _ => Ok(builtins::call_cpu(name, ctx, args)?),
    }
}

/// Runs top-level setup statements, adding their assignments to `globals`.
pub fn run_setup(
    program: &Program,
    statements: &[Node],
    globals: &mut HashMap<String, Value>,
    host: &dyn Host,
) -> Result<(), EvalError> {
    let snapshot = globals.clone();
    let mut ev = Evaluator::new(program, &snapshot, host);
    for s in statements {
        ev.exec(s)?;
    }
    globals.extend(ev.top);
    Ok(())
}

/// Evaluates `node` with `bindings` layered over `globals`.
pub fn eval_with(
    program: &Program,
    globals: &HashMap<String, Value>,
    host: &dyn Host,
    node: &Node,
    bindings: &[(&str, Value)],
) -> Result<Value, EvalError> {
    let mut ev = Evaluator::new(program, globals, host);
    for (n, v) in bindings {
        ev.bind(n, v.clone());
    }
    ev.eval(node)
}

/// Maps a plot value to an RGBA color: a number is a gray level, a list of
/// three is RGB and a list of four is RGBA. Components are clamped to [0, 1]
/// with NaN mapped to 0.
pub fn to_rgba(v: &Value) -> Result<[f64; 4], EvalError> {
    let clamp = |x: f64| if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
    let scalar = |v: &Value| v.as_f64().ok_or_else(|| EvalError::BadOutputType(v.type_of().to_string()));
    let rgba = match v {
        Value::List(items) if items.len() == 3 => [scalar(&items[0])?, scalar(&items[1])?, scalar(&items[2])?, 1.0],
        Value::List(items) if items.len() == 4 => [
            scalar(&items[0])?,
            scalar(&items[1])?,
            scalar(&items[2])?,
            scalar(&items[3])?,
        ],
        v => {
            let g = scalar(v)?;
            [g, g, g, 1.0]
        }
    };
    Ok(rgba.map(clamp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_source;

    struct Still;

    impl Host for Still {
        fn seconds(&self) -> f64 {
            0.0
        }

        fn sample(&self, _: &str, _: [f64; 2]) -> Result<[f64; 4], BuiltinError> {
            Ok([0.0; 4])
        }
    }

    fn run(src: &str) -> Result<Value, EvalError> {
        run_with(src, &[])
    }

    fn run_with(src: &str, bindings: &[(&str, Value)]) -> Result<Value, EvalError> {
        let p = parse_source(src).unwrap();
        let globals = HashMap::new();
        eval_with(&p, &globals, &Still, &p.as_body(), bindings)
    }

    #[test]
    fn paper_sequence_ends_complex() {
        let v = run("a = -2; b = sqrt(a); a = b + 1;").unwrap();
        let Value::Complex(c) = v else { panic!("{v:?}") };
        assert!((c.re - 1.0).abs() < 1e-12);
        assert!((c.im - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn heterogeneous_if_evaluates_concretely() {
        let b = |v| [("booleanexp", Value::Bool(v))];
        assert_eq!(run_with("if(booleanexp, 12, [0])", &b(true)).unwrap(), Value::Int(12));
        assert_eq!(run_with("if(booleanexp, 12, [0])", &b(false)).unwrap(), Value::List(vec![Value::Int(0)]));
    }

    #[test]
    fn function_locals_do_not_leak() {
        let v = run("x = 10; f(P) := (x = P.x; x * 2); f([3, 4]) + x").unwrap();
        assert_eq!(v, Value::Int(16));
        assert!(matches!(run("f(a) := (y = y + a; y); f(1)"), Err(EvalError::UnassignedLocal(_))));
    }

    #[test]
    fn repeat_and_apply() {
        assert_eq!(run("s = 0; repeat(4, s = s + #); s").unwrap(), Value::Int(10));
        assert_eq!(run("apply([1, 2, 3], v, v * v)").unwrap(), Value::List(vec![Value::Int(1), Value::Int(4), Value::Int(9)]));
        assert_eq!(run("apply([1, 2], # + 1)").unwrap(), Value::List(vec![Value::Int(2), Value::Int(3)]));
        assert!(run("repeat(0, 1)").is_err());
    }

    #[test]
    fn nested_list_broadcast() {
        let v = run("[[-1, -1], [1, 1]] / 100").unwrap();
        assert_eq!(
            v,
            Value::List(vec![Value::reals(&[-0.01, -0.01]), Value::reals(&[0.01, 0.01])])
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(run("[1, 2]_3"), Err(EvalError::IndexOutOfRange { .. })));
        assert!(matches!(run("q + 1"), Err(EvalError::Undefined(_))));
        assert!(matches!(run("if(1, 2, 3)"), Err(EvalError::RuntimeTypeError(_))));
        assert!(run("s = 1; if(s > 2, s = 5); s").is_ok());
        assert!(run("if(false, 1)").is_err());
    }

    #[test]
    fn colors() {
        assert_eq!(to_rgba(&Value::Real(0.5)).unwrap(), [0.5, 0.5, 0.5, 1.0]);
        assert_eq!(to_rgba(&Value::reals(&[2.0, f64::NAN, -1.0])).unwrap(), [1.0, 0.0, 0.0, 1.0]);
        assert!(to_rgba(&Value::complex(0.0, 1.0)).is_err());
    }
}
