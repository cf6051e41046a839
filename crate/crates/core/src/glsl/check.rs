//! Static validation of the shader subset, producing a slot-resolved form
//! for the evaluator.
//!
//! Enforced rules include: no implicit conversions between `int` and
//! `float`, declaration before use, no redeclaration within a scope,
//! reserved identifiers, read-only uniforms, a float precision declaration,
//! `void main()`, and the restricted `for` loop form of GLSL ES 1.00.

use std::collections::HashMap;

use super::syntax::{self, BinOp, Expr, ExprKind, Stmt, StmtKind};
use super::{Base, GTy, GVal, GlslError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Floor,
    Ceil,
    Atan,
    Atan2,
    Pow,
    Mod,
    Min,
    Max,
    Clamp,
    Length,
    Dot,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IExpr {
    Const(GVal),
    Local(u32),
    Uniform(u32),
    FragCoord,
    FragColor,
    Call(u32, Vec<IExpr>),
    Builtin(Builtin, GTy, Vec<IExpr>),
    Ctor(GTy, Vec<IExpr>),
    Neg(Box<IExpr>),
    Not(Box<IExpr>),
    Bin(BinOp, GTy, Box<IExpr>, Box<IExpr>),
    Ternary(Box<IExpr>, Box<IExpr>, Box<IExpr>),
    Index(Box<IExpr>, Box<IExpr>),
    Swizzle(Box<IExpr>, [u8; 4], GTy),
    Texture(u32, Box<IExpr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Local(u32),
    FragColor,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IStmt {
    /// Writes `value` to `target`, or to the listed components of it.
    Store {
        target: Target,
        comps: Option<Vec<u8>>,
        value: IExpr,
    },
    If(IExpr, Vec<IStmt>, Vec<IStmt>),
    Loop {
        init: Box<IStmt>,
        cond: IExpr,
        step: Box<IStmt>,
        body: Vec<IStmt>,
    },
    Return(Option<IExpr>),
    Eval(IExpr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IFunc {
    pub name: String,
    pub ret: GTy,
    pub params: Vec<GTy>,
    pub slots: u32,
    pub body: Vec<IStmt>,
}

/// A validated shader.
#[derive(Clone, Debug, PartialEq)]
pub struct Checked {
    pub uniforms: Vec<(String, GTy)>,
    pub funcs: Vec<IFunc>,
    pub main: usize,
}

impl Checked {
    pub fn uniform(&self, name: &str) -> Option<(usize, GTy)> {
        self.uniforms.iter().position(|u| u.0 == name).map(|k| (k, self.uniforms[k].1))
    }
}

pub fn validate(src: &str) -> Result<Checked, GlslError> {
    let shader = syntax::parse(src)?;
    if shader.float_precision.is_none() {
        return Err(GlslError::Invalid {
            line: 1,
            msg: "no default precision declared for float".into(),
        });
    }
    let mut c = Checker::default();
    for (ty, name, len, line) in &shader.uniforms {
        c.reserved(name, *line)?;
        if matches!(ty, GTy::Void) {
            return invalid(*line, "uniform of type void");
        }
        if c.uniforms.contains_key(name) || c.arrays.contains_key(name) {
            return invalid(*line, format!("`{name}` redeclared"));
        }
        match len {
            None => {
                c.uniforms.insert(name.clone(), (c.uniform_list.len() as u32, *ty));
                c.uniform_list.push((name.clone(), *ty));
            }
            Some(n) => {
                if *ty == GTy::Sampler2D {
                    return invalid(*line, "sampler arrays are not supported");
                }
                c.arrays.insert(name.clone(), (c.uniform_list.len() as u32, *ty, *n));
                for k in 0..*n {
                    c.uniform_list.push((format!("{name}[{k}]"), *ty));
                }
            }
        }
    }
    for f in &shader.functions {
        c.function(f)?;
    }
    let main = c
        .funcs
        .iter()
        .position(|f| f.name == "main" && f.params.is_empty() && f.ret == GTy::Void)
        .ok_or(GlslError::Invalid {
            line: 1,
            msg: "missing `void main()`".into(),
        })?;
    Ok(Checked {
        uniforms: c.uniform_list,
        funcs: c.funcs,
        main,
    })
}

fn invalid<T>(line: usize, msg: impl Into<String>) -> Result<T, GlslError> {
    Err(GlslError::Invalid { line, msg: msg.into() })
}

#[derive(Clone, Copy)]
struct Local {
    slot: u32,
    ty: GTy,
    /// Loop indices may not be written in the loop body.
    read_only: bool,
}

#[derive(Default)]
struct Checker {
    uniforms: HashMap<String, (u32, GTy)>,
    /// Array uniforms: first slot, element type, length.
    arrays: HashMap<String, (u32, GTy, usize)>,
    uniform_list: Vec<(String, GTy)>,
    funcs: Vec<IFunc>,
    scopes: Vec<HashMap<String, Local>>,
    slots: u32,
    ret: Option<GTy>,
}

fn builtin_name(name: &str) -> Option<Builtin> {
    Some(match name {
        "sin" => Builtin::Sin,
        "cos" => Builtin::Cos,
        "tan" => Builtin::Tan,
        "exp" => Builtin::Exp,
        "log" => Builtin::Log,
        "sqrt" => Builtin::Sqrt,
        "abs" => Builtin::Abs,
        "floor" => Builtin::Floor,
        "ceil" => Builtin::Ceil,
        "atan" => Builtin::Atan,
        "pow" => Builtin::Pow,
        "mod" => Builtin::Mod,
        "min" => Builtin::Min,
        "max" => Builtin::Max,
        "clamp" => Builtin::Clamp,
        "length" => Builtin::Length,
        "dot" => Builtin::Dot,
        _ => return None,
    })
}

fn is_gentype(t: GTy) -> bool {
    matches!(t, GTy::Float | GTy::Vec(_))
}

/// Result type of a builtin call, or `None` if no overload matches.
fn builtin_type(b: Builtin, args: &[GTy]) -> Option<(Builtin, GTy)> {
    use Builtin::*;
    match (b, args) {
        (Sin | Cos | Tan | Exp | Log | Sqrt | Abs | Floor | Ceil, [t]) if is_gentype(*t) => Some((b, *t)),
        (Atan, [t]) if is_gentype(*t) => Some((Atan, *t)),
        (Atan, [y, x]) if is_gentype(*y) && y == x => Some((Atan2, *y)),
        (Pow, [a, b2]) if is_gentype(*a) && a == b2 => Some((Pow, *a)),
        (Mod | Min | Max, [a, b2]) if is_gentype(*a) && (a == b2 || *b2 == GTy::Float) => Some((b, *a)),
        (Clamp, [x, lo, hi]) if is_gentype(*x) && lo == hi && (lo == x || *lo == GTy::Float) => Some((Clamp, *x)),
        (Length, [t]) if is_gentype(*t) => Some((Length, GTy::Float)),
        (Dot, [a, b2]) if is_gentype(*a) && a == b2 => Some((Dot, GTy::Float)),
        _ => None,
    }
}

fn swizzle(field: &str, size: usize) -> Option<Vec<u8>> {
    const SETS: [&str; 3] = ["xyzw", "rgba", "stpq"];
    let set = SETS.iter().find(|s| field.chars().all(|c| s.contains(c)))?;
    if field.is_empty() || field.len() > 4 {
        return None;
    }
    field
        .chars()
        .map(|c| set.find(c).filter(|&k| k < size).map(|k| k as u8))
        .collect()
}

fn const_int(e: &Expr) -> Option<i64> {
    match &e.kind {
        ExprKind::Int(v) => Some(*v),
        ExprKind::Neg(x) => const_int(x).map(|v| -v),
        _ => None,
    }
}

fn is_constant(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Bool(_) => true,
        ExprKind::Neg(x) => is_constant(x),
        _ => false,
    }
}

impl Checker {
    fn reserved(&self, name: &str, line: usize) -> Result<(), GlslError> {
        if name.starts_with("gl_") || name.contains("__") {
            return invalid(line, format!("`{name}` is a reserved identifier"));
        }
        if GTy::parse(name).is_some() || matches!(name, "true" | "false" | "if" | "else" | "for" | "return") {
            return invalid(line, format!("`{name}` is a keyword"));
        }
        Ok(())
    }

    fn declare(&mut self, name: &str, ty: GTy, line: usize, read_only: bool) -> Result<u32, GlslError> {
        self.reserved(name, line)?;
        let scope = self.scopes.last_mut().expect("open scope");
        if scope.contains_key(name) {
            return invalid(line, format!("`{name}` redeclared in the same scope"));
        }
        let slot = self.slots;
        self.slots += 1;
        scope.insert(name.to_string(), Local { slot, ty, read_only });
        Ok(slot)
    }

    fn lookup(&self, name: &str) -> Option<Local> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn function(&mut self, f: &syntax::Function) -> Result<(), GlslError> {
        self.reserved(&f.name, f.line)?;
        if builtin_name(&f.name).is_some() || f.name == "texture2D" {
            return invalid(f.line, format!("`{}` redefines a built-in function", f.name));
        }
        let params: Vec<GTy> = f.params.iter().map(|p| p.0).collect();
        if self.funcs.iter().any(|g| g.name == f.name && g.params == params) {
            return invalid(f.line, format!("`{}` defined twice", f.name));
        }
        if params.iter().any(|t| matches!(t, GTy::Void | GTy::Sampler2D)) {
            return invalid(f.line, "unsupported parameter type");
        }
        self.scopes = vec![HashMap::new()];
        self.slots = 0;
        self.ret = Some(f.ret);
        for (t, n) in &f.params {
            self.declare(n, *t, f.line, false)?;
        }
        let body = self.block(&f.body)?;
        self.scopes.clear();
        self.funcs.push(IFunc {
            name: f.name.clone(),
            ret: f.ret,
            params,
            slots: self.slots,
            body,
        });
        Ok(())
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Vec<IStmt>, GlslError> {
        self.scopes.push(HashMap::new());
        let out = stmts.iter().map(|s| self.stmt(s)).collect::<Result<Vec<_>, _>>();
        self.scopes.pop();
        out
    }

    fn stmt(&mut self, s: &Stmt) -> Result<IStmt, GlslError> {
        let line = s.line;
        match &s.kind {
            StmtKind::Decl { ty, name, init } => {
                if matches!(ty, GTy::Void | GTy::Sampler2D) {
                    return invalid(line, format!("cannot declare a local of type {ty}"));
                }
                let value = match init {
                    Some(e) => {
                        let (v, t) = self.expr(e)?;
                        if t != *ty {
                            return invalid(line, format!("cannot initialize {ty} `{name}` with {t}"));
                        }
                        v
                    }
                    None => IExpr::Const(GVal::zero(*ty)),
                };
                let slot = self.declare(name, *ty, line, false)?;
                Ok(IStmt::Store {
                    target: Target::Local(slot),
                    comps: None,
                    value,
                })
            }
            StmtKind::Assign { target, op, value } => {
                let (t, comps, ty) = self.lvalue(target)?;
                let (v, vt) = self.expr(value)?;
                let value = match op {
                    None => {
                        if vt != ty {
                            return invalid(line, format!("cannot assign {vt} to {ty}"));
                        }
                        v
                    }
                    Some(op) => {
                        let (cur, ct) = self.expr(target)?;
                        let rt = self.arith_type(*op, ct, vt, line)?;
                        if rt != ty {
                            return invalid(line, format!("compound assignment yields {rt}, target is {ty}"));
                        }
                        IExpr::Bin(*op, rt, Box::new(cur), Box::new(v))
                    }
                };
                Ok(IStmt::Store {
                    target: t,
                    comps,
                    value,
                })
            }
            StmtKind::Step { target, delta } => {
                let (t, comps, ty) = self.lvalue(target)?;
                let one = match ty {
                    GTy::Int => GVal::int(*delta),
                    GTy::Float => GVal::float(*delta as f64),
                    _ => return invalid(line, format!("cannot increment {ty}")),
                };
                let (cur, _) = self.expr(target)?;
                Ok(IStmt::Store {
                    target: t,
                    comps,
                    value: IExpr::Bin(BinOp::Add, ty, Box::new(cur), Box::new(IExpr::Const(one))),
                })
            }
            StmtKind::If { cond, then, otherwise } => {
                let c = self.condition(cond)?;
                let t = self.block(then)?;
                let e = match otherwise {
                    Some(o) => self.block(o)?,
                    None => Vec::new(),
                };
                Ok(IStmt::If(c, t, e))
            }
            StmtKind::For { init, cond, step, body } => self.for_loop(init, cond, step, body, line),
            StmtKind::Return(e) => {
                let ret = self.ret.expect("inside a function");
                match (e, ret) {
                    (None, GTy::Void) => Ok(IStmt::Return(None)),
                    (None, _) => invalid(line, "missing return value"),
                    (Some(_), GTy::Void) => invalid(line, "void function returns a value"),
                    (Some(e), _) => {
                        let (v, t) = self.expr(e)?;
                        if t != ret {
                            return invalid(line, format!("returns {t}, expected {ret}"));
                        }
                        Ok(IStmt::Return(Some(v)))
                    }
                }
            }
            StmtKind::Block(b) => Ok(IStmt::If(IExpr::Const(GVal::bool(true)), self.block(b)?, Vec::new())),
            StmtKind::Expr(e) => Ok(IStmt::Eval(self.expr(e)?.0)),
        }
    }

    fn for_loop(&mut self, init: &Stmt, cond: &Expr, step: &Stmt, body: &[Stmt], line: usize) -> Result<IStmt, GlslError> {
        let StmtKind::Decl {
            ty,
            name,
            init: Some(start),
        } = &init.kind
        else {
            return invalid(line, "loop must declare and initialize its index");
        };
        if !matches!(ty, GTy::Int | GTy::Float) || !is_constant(start) {
            return invalid(line, "loop index must be an int or float with a constant initializer");
        }
        let is_index = |e: &Expr| matches!(&e.kind, ExprKind::Ident(n) if n == name);
        match &cond.kind {
            ExprKind::Binary(
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne,
                l,
                r,
            ) if is_index(l) && is_constant(r) => {}
            _ => return invalid(line, "loop condition must compare the index with a constant"),
        }
        match &step.kind {
            StmtKind::Step { target, .. } if is_index(target) => {}
            StmtKind::Assign {
                target,
                op: Some(BinOp::Add | BinOp::Sub),
                value,
            } if is_index(target) && is_constant(value) => {}
            _ => return invalid(line, "loop step must change the index by a constant"),
        }
        self.scopes.push(HashMap::new());
        let (start, st) = self.expr(start)?;
        if st != *ty {
            return invalid(line, format!("cannot initialize {ty} `{name}` with {st}"));
        }
        let slot = self.declare(name, *ty, line, false)?;
        let (c, c_ty) = self.expr(cond)?;
        if c_ty != GTy::Bool {
            return invalid(line, "loop condition is not a bool");
        }
        let s = self.stmt(step)?;
        self.scopes.last_mut().expect("loop scope").get_mut(name).expect("index").read_only = true;
        let b = self.block(body)?;
        self.scopes.pop();
        Ok(IStmt::Loop {
            init: Box::new(IStmt::Store {
                target: Target::Local(slot),
                comps: None,
                value: start,
            }),
            cond: c,
            step: Box::new(s),
            body: b,
        })
    }

    fn condition(&mut self, e: &Expr) -> Result<IExpr, GlslError> {
        let (c, t) = self.expr(e)?;
        if t != GTy::Bool {
            return invalid(e.line, format!("condition has type {t}, expected bool"));
        }
        Ok(c)
    }

    fn lvalue(&mut self, e: &Expr) -> Result<(Target, Option<Vec<u8>>, GTy), GlslError> {
        let line = e.line;
        match &e.kind {
            ExprKind::Ident(n) if n == "gl_FragColor" => Ok((Target::FragColor, None, GTy::Vec(4))),
            ExprKind::Ident(n) => match self.lookup(n) {
                Some(l) if l.read_only => invalid(line, format!("loop index `{n}` modified in the loop body")),
                Some(l) => Ok((Target::Local(l.slot), None, l.ty)),
                None if self.uniforms.contains_key(n) || self.arrays.contains_key(n) => invalid(line, format!("uniform `{n}` is read-only")),
                None => invalid(line, format!("`{n}` is not declared")),
            },
            ExprKind::Index(base, index) => {
                let (t, comps, ty) = self.lvalue(base)?;
                if comps.is_some() || !ty.is_vector() {
                    return invalid(line, "only vectors can be indexed");
                }
                let k = const_int(index).ok_or(GlslError::Invalid {
                    line,
                    msg: "assignment to a vector component needs a constant index".into(),
                })?;
                if k < 0 || k as usize >= ty.size() {
                    return invalid(line, format!("index {k} out of range for {ty}"));
                }
                Ok((t, Some(vec![k as u8]), GTy::with(ty.base().expect("vector"), 1)))
            }
            ExprKind::Field(base, f) => {
                let (t, comps, ty) = self.lvalue(base)?;
                if comps.is_some() || !ty.is_vector() {
                    return invalid(line, "only vectors have components");
                }
                let sw = swizzle(f, ty.size()).ok_or(GlslError::Invalid {
                    line,
                    msg: format!("bad swizzle `.{f}` on {ty}"),
                })?;
                if (1..sw.len()).any(|i| sw[..i].contains(&sw[i])) {
                    return invalid(line, format!("repeated component in `.{f}`"));
                }
                let rt = GTy::with(ty.base().expect("vector"), sw.len());
                Ok((t, Some(sw), rt))
            }
            _ => invalid(line, "expression is not assignable"),
        }
    }

    fn arith_type(&self, op: BinOp, l: GTy, r: GTy, line: usize) -> Result<GTy, GlslError> {
        let (lb, rb) = (l.base(), r.base());
        if lb.is_none() || lb != rb || lb == Some(Base::Bool) {
            return invalid(line, format!("no operator {op:?} for {l} and {r}"));
        }
        if l == r {
            Ok(l)
        } else if l.is_scalar() && r.is_vector() {
            Ok(r)
        } else if l.is_vector() && r.is_scalar() {
            Ok(l)
        } else {
            invalid(line, format!("no operator {op:?} for {l} and {r}"))
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<(IExpr, GTy), GlslError> {
        let line = e.line;
        Ok(match &e.kind {
            ExprKind::Int(v) => {
                if *v > i32::MAX as i64 {
                    return invalid(line, format!("integer constant {v} out of range"));
                }
                (IExpr::Const(GVal::int(*v)), GTy::Int)
            }
            ExprKind::Float(v) => (IExpr::Const(GVal::float(*v)), GTy::Float),
            ExprKind::Bool(b) => (IExpr::Const(GVal::bool(*b)), GTy::Bool),
            ExprKind::Ident(n) => {
                if let Some(l) = self.lookup(n) {
                    (IExpr::Local(l.slot), l.ty)
                } else if let Some(&(k, t)) = self.uniforms.get(n) {
                    if t == GTy::Sampler2D {
                        return invalid(line, format!("sampler `{n}` used outside texture2D"));
                    }
                    (IExpr::Uniform(k), t)
                } else if self.arrays.contains_key(n) {
                    return invalid(line, format!("uniform array `{n}` used without index"));
                } else if n == "gl_FragCoord" {
                    (IExpr::FragCoord, GTy::Vec(4))
                } else if n == "gl_FragColor" {
                    (IExpr::FragColor, GTy::Vec(4))
                } else {
                    return invalid(line, format!("`{n}` is not declared"));
                }
            }
            ExprKind::Neg(x) => {
                let (v, t) = self.expr(x)?;
                if !matches!(t.base(), Some(Base::Int | Base::Float)) {
                    return invalid(line, format!("cannot negate {t}"));
                }
                (IExpr::Neg(Box::new(v)), t)
            }
            ExprKind::Not(x) => {
                let (v, t) = self.expr(x)?;
                if t != GTy::Bool {
                    return invalid(line, format!("`!` needs bool, got {t}"));
                }
                (IExpr::Not(Box::new(v)), GTy::Bool)
            }
            ExprKind::Binary(op, l, r) => {
                let (lv, lt) = self.expr(l)?;
                let (rv, rt) = self.expr(r)?;
                let t = match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => self.arith_type(*op, lt, rt, line)?,
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        if lt != rt || !matches!(lt, GTy::Int | GTy::Float) {
                            return invalid(line, format!("cannot compare {lt} with {rt}"));
                        }
                        GTy::Bool
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if lt != rt || lt.base().is_none() {
                            return invalid(line, format!("cannot compare {lt} with {rt}"));
                        }
                        GTy::Bool
                    }
                    BinOp::And | BinOp::Or | BinOp::Xor => {
                        if lt != GTy::Bool || rt != GTy::Bool {
                            return invalid(line, format!("logical operator on {lt} and {rt}"));
                        }
                        GTy::Bool
                    }
                };
                (IExpr::Bin(*op, t, Box::new(lv), Box::new(rv)), t)
            }
            ExprKind::Ternary(c, a, b) => {
                let c = self.condition(c)?;
                let (av, at) = self.expr(a)?;
                let (bv, bt) = self.expr(b)?;
                if at != bt {
                    return invalid(line, format!("ternary branches differ: {at} and {bt}"));
                }
                (IExpr::Ternary(Box::new(c), Box::new(av), Box::new(bv)), at)
            }
            ExprKind::Index(base, index) if matches!(&base.kind, ExprKind::Ident(n) if self.lookup(n).is_none() && self.arrays.contains_key(n)) => {
                let ExprKind::Ident(n) = &base.kind else { unreachable!() };
                let (first, t, len) = self.arrays[n];
                let k = const_int(index).ok_or(GlslError::Invalid {
                    line,
                    msg: format!("uniform array `{n}` needs a constant index"),
                })?;
                if k < 0 || k as usize >= len {
                    return invalid(line, format!("index {k} out of range for `{n}`"));
                }
                (IExpr::Uniform(first + k as u32), t)
            }
            ExprKind::Index(base, index) => {
                let (bv, bt) = self.expr(base)?;
                let (iv, it) = self.expr(index)?;
                if !bt.is_vector() || it != GTy::Int {
                    return invalid(line, format!("cannot index {bt} with {it}"));
                }
                if let Some(k) = const_int(index) {
                    if k < 0 || k as usize >= bt.size() {
                        return invalid(line, format!("index {k} out of range for {bt}"));
                    }
                }
                (IExpr::Index(Box::new(bv), Box::new(iv)), GTy::with(bt.base().expect("vector"), 1))
            }
            ExprKind::Field(base, f) => {
                let (bv, bt) = self.expr(base)?;
                if !bt.is_vector() {
                    return invalid(line, format!("{bt} has no field `{f}`"));
                }
                let sw = swizzle(f, bt.size()).ok_or(GlslError::Invalid {
                    line,
                    msg: format!("bad swizzle `.{f}` on {bt}"),
                })?;
                let rt = GTy::with(bt.base().expect("vector"), sw.len());
                let mut idx = [0u8; 4];
                idx[..sw.len()].copy_from_slice(&sw);
                (IExpr::Swizzle(Box::new(bv), idx, rt), rt)
            }
            ExprKind::Call(name, args) => self.call(name, args, line)?,
        })
    }

    fn call(&mut self, name: &str, args: &[Expr], line: usize) -> Result<(IExpr, GTy), GlslError> {
        if name == "texture2D" {
            let [s, coord] = args else {
                return invalid(line, "texture2D takes two arguments");
            };
            let ExprKind::Ident(sn) = &s.kind else {
                return invalid(line, "texture2D needs a sampler uniform");
            };
            let Some(&(k, GTy::Sampler2D)) = self.uniforms.get(sn) else {
                return invalid(line, format!("`{sn}` is not a sampler2D uniform"));
            };
            let (cv, ct) = self.expr(coord)?;
            if ct != GTy::Vec(2) {
                return invalid(line, format!("texture2D coordinate has type {ct}"));
            }
            return Ok((IExpr::Texture(k, Box::new(cv)), GTy::Vec(4)));
        }
        let mut vals = Vec::with_capacity(args.len());
        let mut types = Vec::with_capacity(args.len());
        for a in args {
            let (v, t) = self.expr(a)?;
            vals.push(v);
            types.push(t);
        }
        if let Some(ty) = GTy::parse(name) {
            self.constructor(ty, &types, line)?;
            return Ok((IExpr::Ctor(ty, vals), ty));
        }
        if let Some(b) = builtin_name(name) {
            let (b, t) = builtin_type(b, &types).ok_or(GlslError::Invalid {
                line,
                msg: format!(
                    "no overload of `{name}` for ({})",
                    types.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
                ),
            })?;
            return Ok((IExpr::Builtin(b, t, vals), t));
        }
        match self.funcs.iter().position(|f| f.name == name && f.params == types) {
            Some(k) => Ok((IExpr::Call(k as u32, vals), self.funcs[k].ret)),
            None if self.funcs.iter().any(|f| f.name == name) => invalid(line, format!("no overload of `{name}` for these arguments")),
            None => invalid(line, format!("function `{name}` is not defined before use")),
        }
    }

    fn constructor(&self, ty: GTy, args: &[GTy], line: usize) -> Result<(), GlslError> {
        if matches!(ty, GTy::Void | GTy::Sampler2D) || args.is_empty() {
            return invalid(line, format!("bad constructor {ty}"));
        }
        if args.iter().any(|t| t.base().is_none()) {
            return invalid(line, format!("bad argument to {ty} constructor"));
        }
        if ty.is_scalar() {
            return if args.len() == 1 {
                Ok(())
            } else {
                invalid(line, format!("{ty} constructor takes one argument"))
            };
        }
        if args.len() == 1 && args[0].is_scalar() {
            return Ok(());
        }
        let mut have = 0;
        for (k, t) in args.iter().enumerate() {
            if have >= ty.size() {
                return invalid(line, format!("too many arguments to {ty} constructor (argument {})", k + 1));
            }
            have += t.size();
        }
        if have < ty.size() {
            return invalid(line, format!("not enough data for {ty} constructor"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wrap(body: &str) -> String {
        format!("precision highp float;\nuniform float _u0;\nvoid main() {{\n{body}\n}}\n")
    }

    #[test]
    fn accepts_typical_code() {
        let ok = wrap(
            "vec2 p = gl_FragCoord.xy;\nfloat r = length(p) + _u0;\nint k = int(r);\nvec3 c = vec3(p, 1.0);\nc[1] = float(k);\nc.xz = c.zx;\nfor (int i = 0; i < 3; i++) { r += float(i); }\ngl_FragColor = clamp(vec4(c, r), 0.0, 1.0);",
        );
        validate(&ok).unwrap();
    }

    #[test]
    fn rejects_rule_violations() {
        let bad = [
            "float x = 1;",
            "float x = 1.0 + 1;",
            "int k = 2; float y = 2.0 * k;",
            "float x = 1.0; float x = 2.0;",
            "float gl_x = 1.0;",
            "float a__b = 1.0;",
            "_u0 = 1.0;",
            "float y = z;",
            "for (int i = 0; i < 3; i++) { i = 2; }",
            "int n = 3; for (int i = 0; i < n; i++) { }",
            "vec2 v = vec2(1.0, 2.0, 3.0);",
            "vec2 v = vec2(1.0); v[2] = 1.0;",
            "float y = abs(1);",
            "if (1.0) { }",
            "float y = mod(1.0, vec2(1.0)).x;",
        ];
        for b in bad {
            assert!(validate(&wrap(b)).is_err(), "accepted: {b}");
        }
        assert!(validate("uniform float a;\nvoid main() {}").is_err());
        assert!(validate("precision highp float;\nvoid f() {}").is_err());
        assert!(validate("precision highp float;\nvoid main() { g(); }\nvoid g() {}").is_err());
    }
}
