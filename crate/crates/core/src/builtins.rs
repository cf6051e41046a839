//! Builtin function registry: overload signatures, `min_sign` resolution,
//! CPU implementations and GLSL emitters.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::types::TypeTerm;
use crate::types::TypeTerm::{Bool as B, Complex as C, Int as I, Real as R};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum BuiltinError {
    #[error("unknown function `{0}`")]
    UnknownBuiltin(String),
    #[error("`{name}` takes {expected} arguments, got {found}")]
    ArityMismatch {
        name: String,
        expected: String,
        found: usize,
    },
    #[error("`{name}` has no unique minimal signature for ({args})")]
    Ambiguous { name: String, args: String },
    #[error("{0}")]
    Runtime(String),
}

/// Parameter pattern of an overload.
#[derive(Clone, Debug, PartialEq)]
pub enum Pat {
    Ty(TypeTerm),
    /// `List(N, elem)`; every list pattern of one overload shares the same `N`.
    List(TypeTerm),
    /// `ConstInt(k)` with `|k| <= MAX_UNROLL`.
    SmallConst,
}

pub const MAX_UNROLL: i32 = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum RetPat {
    Ty(TypeTerm),
    List(TypeTerm),
}

impl fmt::Display for Pat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pat::Ty(t) => write!(f, "{t}"),
            Pat::List(e) => write!(f, "list<N, {e}>"),
            Pat::SmallConst => f.write_str("const<k>"),
        }
    }
}

impl fmt::Display for RetPat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RetPat::Ty(t) => write!(f, "{t}"),
            RetPat::List(e) => write!(f, "list<N, {e}>"),
        }
    }
}

/// Services the CPU implementations need from their surroundings.
pub trait Host {
    fn seconds(&self) -> f64;
    /// Bilinear texture lookup at world coordinate `coord`, returning RGBA.
    fn sample(&self, texture: &str, coord: [f64; 2]) -> Result<[f64; 4], BuiltinError>;
}

pub struct CallCtx<'a> {
    pub host: &'a dyn Host,
    /// Texture named by a leading string argument, if any.
    pub texture: Option<&'a str>,
}

/// Code generation services used by emitters.
pub trait GlslSink {
    /// Requests a helper function by name (see [`glsl_helper`]).
    fn helper(&mut self, name: &'static str);
    /// Binds `expr` of type `ty` to a fresh local and returns its name.
    fn temp(&mut self, expr: &str, ty: &TypeTerm) -> Result<String, String>;
}

pub type CpuFn = fn(&CallCtx, &[Value]) -> Result<Value, BuiltinError>;
pub type GlslFn = fn(&mut dyn GlslSink, &[String], &Signature) -> Result<String, String>;

pub struct Overload {
    pub params: Vec<Pat>,
    pub ret: RetPat,
    pub cpu: CpuFn,
    pub glsl: GlslFn,
}

pub struct Builtin {
    pub name: &'static str,
    /// Impure builtins are never folded into shader constants.
    pub pure: bool,
    pub overloads: Vec<Overload>,
}

/// A resolved overload instantiated at concrete parameter types.
#[derive(Clone, Debug, PartialEq)]
pub struct Signature {
    pub name: String,
    pub overload: usize,
    pub params: Vec<TypeTerm>,
    pub ret: TypeTerm,
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
        write!(f, "{}({}) -> {}", self.name, ps.join(", "), self.ret)
    }
}

impl Overload {
    /// Instantiates the overload at `args`, or `None` if it does not apply.
    pub fn instantiate(&self, args: &[TypeTerm]) -> Option<(Vec<TypeTerm>, TypeTerm)> {
        if args.len() != self.params.len() {
            return None;
        }
        let mut n = None;
        for (p, a) in self.params.iter().zip(args) {
            if let Pat::List(_) = p {
                let TypeTerm::List(k, _) = a else { return None };
                match n {
                    None => n = Some(*k),
                    Some(m) if m != *k => return None,
                    _ => {}
                }
            }
        }
        let mut params = Vec::with_capacity(args.len());
        for (p, a) in self.params.iter().zip(args) {
            let t = match p {
                Pat::Ty(t) => t.clone(),
                Pat::List(e) => TypeTerm::list(n?, e.clone()),
                Pat::SmallConst => match a {
                    TypeTerm::ConstInt(k) if k.abs() <= MAX_UNROLL => a.clone(),
                    _ => return None,
                },
            };
            if !a.is_subtype(&t) {
                return None;
            }
            params.push(t);
        }
        let ret = match &self.ret {
            RetPat::Ty(t) => t.clone(),
            RetPat::List(e) => TypeTerm::list(n?, e.clone()),
        };
        Some((params, ret))
    }
}

pub struct Registry {
    builtins: BTreeMap<&'static str, Builtin>,
}

impl Registry {
    pub fn get(&self, name: &str) -> Option<&Builtin> {
        self.builtins.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Builtin> {
        self.builtins.values()
    }

    /// Least applicable overload for argument types `args`.
    ///
    /// `Ok(None)` means no overload applies; the call then has type `Top`.
    /// Arguments must not contain `Bot`.
    pub fn min_sign(&self, name: &str, args: &[TypeTerm]) -> Result<Option<Signature>, BuiltinError> {
        let b = self
            .get(name)
            .ok_or_else(|| BuiltinError::UnknownBuiltin(name.to_string()))?;
        if !b.overloads.iter().any(|o| o.params.len() == args.len()) {
            let mut arities: Vec<usize> = b.overloads.iter().map(|o| o.params.len()).collect();
            arities.sort();
            arities.dedup();
            let expected = arities.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" or ");
            return Err(BuiltinError::ArityMismatch {
                name: name.to_string(),
                expected,
                found: args.len(),
            });
        }
        let candidates: Vec<(usize, Vec<TypeTerm>, TypeTerm)> = b
            .overloads
            .iter()
            .enumerate()
            .filter_map(|(k, o)| o.instantiate(args).map(|(p, r)| (k, p, r)))
            .collect();
        if candidates.is_empty() {
            return Ok(None);
        }
        let below = |a: &[TypeTerm], b: &[TypeTerm]| a.iter().zip(b).all(|(x, y)| x.is_subtype(y));
        for (k, params, ret) in &candidates {
            if candidates.iter().all(|(_, other, _)| below(params, other)) {
                return Ok(Some(Signature {
                    name: name.to_string(),
                    overload: *k,
                    params: params.clone(),
                    ret: ret.clone(),
                }));
            }
        }
        Err(BuiltinError::Ambiguous {
            name: name.to_string(),
            args: args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", "),
        })
    }

    pub fn overload(&self, sig: &Signature) -> &Overload {
        &self.builtins[sig.name.as_str()].overloads[sig.overload]
    }

    /// Human-readable overload table.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for b in self.iter() {
            for o in &b.overloads {
                let ps: Vec<String> = o.params.iter().map(|p| p.to_string()).collect();
                out.push_str(&format!("{}({}) -> {}\n", b.name, ps.join(", "), o.ret));
            }
        }
        out
    }
}

pub fn registry() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(|| Registry {
        builtins: build().into_iter().map(|b| (b.name, b)).collect(),
    })
}

pub fn min_sign(name: &str, args: &[TypeTerm]) -> Result<Option<Signature>, BuiltinError> {
    registry().min_sign(name, args)
}

/// Special forms and entry points that look like calls but are not builtins.
pub const SPECIAL_FORMS: &[&str] = &["if", "repeat", "apply", "colorplot"];

/// Names a user function may not take.
pub fn is_reserved_name(name: &str) -> bool {
    SPECIAL_FORMS.contains(&name) || registry().get(name).is_some()
}

/// Builtins whose first argument may be a texture name string.
pub fn takes_texture_name(name: &str) -> bool {
    name == "imagergb"
}

// ---------------------------------------------------------------------------
// CPU helpers

fn runtime(msg: impl Into<String>) -> BuiltinError {
    BuiltinError::Runtime(msg.into())
}

fn real(v: &Value) -> Result<f64, BuiltinError> {
    v.as_f64().ok_or_else(|| runtime(format!("expected a real number, got {v}")))
}

fn int(v: &Value) -> Result<i32, BuiltinError> {
    v.as_int().ok_or_else(|| runtime(format!("expected an integer, got {v}")))
}

fn boolean(v: &Value) -> Result<bool, BuiltinError> {
    v.as_bool().ok_or_else(|| runtime(format!("expected a boolean, got {v}")))
}

fn cplx(v: &Value) -> Result<Complex64, BuiltinError> {
    v.as_complex().ok_or_else(|| runtime(format!("expected a complex number, got {v}")))
}

fn items(v: &Value) -> Result<&[Value], BuiltinError> {
    v.as_list().ok_or_else(|| runtime(format!("expected a list, got {v}")))
}

#[derive(Clone, Copy)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

/// Scalar arithmetic with elementwise extension and scalar broadcast.
fn arith(op: Op, a: &Value, b: &Value) -> Result<Value, BuiltinError> {
    match (a, b) {
        (Value::List(xs), Value::List(ys)) => {
            if xs.len() != ys.len() {
                return Err(runtime("list length mismatch"));
            }
            Ok(Value::List(
                xs.iter().zip(ys).map(|(x, y)| arith(op, x, y)).collect::<Result<_, _>>()?,
            ))
        }
        (Value::List(xs), s) => Ok(Value::List(
            xs.iter().map(|x| arith(op, x, s)).collect::<Result<_, _>>()?,
        )),
        (s, Value::List(ys)) => Ok(Value::List(
            ys.iter().map(|y| arith(op, s, y)).collect::<Result<_, _>>()?,
        )),
        (Value::Int(x), Value::Int(y)) => Ok(match op {
            Op::Add => Value::Int(x.wrapping_add(*y)),
            Op::Sub => Value::Int(x.wrapping_sub(*y)),
            Op::Mul => Value::Int(x.wrapping_mul(*y)),
            Op::Div => Value::Real(*x as f64 / *y as f64),
        }),
        (Value::Complex(_), _) | (_, Value::Complex(_)) => {
            let (x, y) = (cplx(a)?, cplx(b)?);
            Ok(Value::Complex(match op {
                Op::Add => x + y,
                Op::Sub => x - y,
                Op::Mul => cmath::mul(x, y),
                Op::Div => cmath::div(x, y),
            }))
        }
        _ => {
            let (x, y) = (real(a)?, real(b)?);
            Ok(Value::Real(match op {
                Op::Add => x + y,
                Op::Sub => x - y,
                Op::Mul => x * y,
                Op::Div => x / y,
            }))
        }
    }
}

fn negate(v: &Value) -> Result<Value, BuiltinError> {
    Ok(match v {
        Value::Int(i) => Value::Int(i.wrapping_neg()),
        Value::Real(r) => Value::Real(-r),
        Value::Complex(c) => Value::Complex(-c),
        Value::List(xs) => Value::List(xs.iter().map(negate).collect::<Result<_, _>>()?),
        Value::Bool(_) => return Err(runtime("cannot negate a boolean")),
    })
}

fn dot(a: &Value, b: &Value) -> Result<Value, BuiltinError> {
    let (xs, ys) = (items(a)?, items(b)?);
    if xs.len() != ys.len() {
        return Err(runtime("list length mismatch"));
    }
    let mut acc: Option<Value> = None;
    for (x, y) in xs.iter().zip(ys) {
        let p = arith(Op::Mul, x, y)?;
        acc = Some(match acc {
            None => p,
            Some(s) => arith(Op::Add, &s, &p)?,
        });
    }
    acc.ok_or_else(|| runtime("dot product of empty lists"))
}

fn norm(v: &Value) -> Result<f64, BuiltinError> {
    let mut sum = 0.0;
    for x in items(v)? {
        let c = cplx(x)?;
        sum += c.re * c.re + c.im * c.im;
    }
    Ok(sum.sqrt())
}

fn fold_list(v: &Value, f: fn(f64, f64) -> f64) -> Result<f64, BuiltinError> {
    let xs = items(v)?;
    let mut it = xs.iter();
    let first = real(it.next().ok_or_else(|| runtime("empty list"))?)?;
    it.try_fold(first, |acc, x| Ok(f(acc, real(x)?)))
}

fn compare(a: &Value, b: &Value, f: fn(f64, f64) -> bool) -> Result<Value, BuiltinError> {
    Ok(Value::Bool(f(real(a)?, real(b)?)))
}

fn rgb(r: f64, g: f64, b: f64) -> Value {
    Value::reals(&[r, g, b])
}

/// Floor-semantics modulo, matching GLSL `mod`.
fn fmod_floor(x: f64, y: f64) -> f64 {
    x - y * (x / y).floor()
}

fn hue(h: f64) -> Value {
    let h = fmod_floor(h, 1.0) * 6.0;
    let c = |v: f64| v.clamp(0.0, 1.0);
    rgb(
        c((h - 3.0).abs() - 1.0),
        c(2.0 - (h - 2.0).abs()),
        c(2.0 - (h - 4.0).abs()),
    )
}

fn powi_real(x: f64, n: i32) -> f64 {
    x.powi(n)
}

fn unrolled_real(x: f64, k: i32) -> f64 {
    let mut acc = x;
    for _ in 1..k.abs() {
        acc *= x;
    }
    match k {
        0 => 1.0,
        k if k < 0 => 1.0 / acc,
        _ => acc,
    }
}

fn unrolled_complex(z: Complex64, k: i32) -> Complex64 {
    let mut acc = z;
    for _ in 1..k.abs() {
        acc = cmath::mul(acc, z);
    }
    match k {
        0 => Complex64::new(1.0, 0.0),
        k if k < 0 => cmath::div(Complex64::new(1.0, 0.0), acc),
        _ => acc,
    }
}

/// Complex elementary functions using the same formulas as the GLSL helpers.
pub mod cmath {
    use num_complex::Complex64;

    pub fn mul(a: Complex64, b: Complex64) -> Complex64 {
        Complex64::new(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)
    }

    pub fn div(a: Complex64, b: Complex64) -> Complex64 {
        let d = b.re * b.re + b.im * b.im;
        Complex64::new((a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d)
    }

    pub fn exp(z: Complex64) -> Complex64 {
        let e = z.re.exp();
        Complex64::new(e * z.im.cos(), e * z.im.sin())
    }

    pub fn log(z: Complex64) -> Complex64 {
        Complex64::new(z.re.hypot(z.im).ln(), z.im.atan2(z.re))
    }

    pub fn sqrt(z: Complex64) -> Complex64 {
        let r = z.re.hypot(z.im);
        let s = if z.im < 0.0 { -1.0 } else { 1.0 };
        Complex64::new((0.5 * (r + z.re)).sqrt(), s * (0.5 * (r - z.re)).sqrt())
    }

    fn cosh_sinh(y: f64) -> (f64, f64) {
        let (ep, em) = (y.exp(), (-y).exp());
        (0.5 * (ep + em), 0.5 * (ep - em))
    }

    pub fn sin(z: Complex64) -> Complex64 {
        let (ch, sh) = cosh_sinh(z.im);
        Complex64::new(z.re.sin() * ch, z.re.cos() * sh)
    }

    pub fn cos(z: Complex64) -> Complex64 {
        let (ch, sh) = cosh_sinh(z.im);
        Complex64::new(z.re.cos() * ch, -z.re.sin() * sh)
    }

    pub fn pow(a: Complex64, b: Complex64) -> Complex64 {
        if a.re == 0.0 && a.im == 0.0 {
            return if b.re == 0.0 && b.im == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        exp(mul(b, log(a)))
    }
}

// ---------------------------------------------------------------------------
// GLSL helpers

/// Source of a helper function and the helpers it calls.
pub fn glsl_helper(name: &str) -> Option<(&'static str, &'static [&'static str])> {
    Some(match name {
        "cmul" => (
            "vec2 cmul(vec2 a, vec2 b) {\n  return vec2(a.x * b.x - a.y * b.y, a.x * b.y + a.y * b.x);\n}\n",
            &[],
        ),
        "cdiv" => (
            "vec2 cdiv(vec2 a, vec2 b) {\n  float d = b.x * b.x + b.y * b.y;\n  return vec2((a.x * b.x + a.y * b.y) / d, (a.y * b.x - a.x * b.y) / d);\n}\n",
            &[],
        ),
        "cexp" => (
            "vec2 cexp(vec2 z) {\n  float e = exp(z.x);\n  return vec2(e * cos(z.y), e * sin(z.y));\n}\n",
            &[],
        ),
        "clog" => (
            "vec2 clog(vec2 z) {\n  return vec2(log(length(z)), atan(z.y, z.x));\n}\n",
            &[],
        ),
        "csqrt" => (
            "vec2 csqrt(vec2 z) {\n  float r = length(z);\n  float s = z.y < 0.0 ? -1.0 : 1.0;\n  return vec2(sqrt(0.5 * (r + z.x)), s * sqrt(0.5 * (r - z.x)));\n}\n",
            &[],
        ),
        "csin" => (
            "vec2 csin(vec2 z) {\n  float ep = exp(z.y);\n  float em = exp(-z.y);\n  return vec2(sin(z.x) * 0.5 * (ep + em), cos(z.x) * 0.5 * (ep - em));\n}\n",
            &[],
        ),
        "ccos" => (
            "vec2 ccos(vec2 z) {\n  float ep = exp(z.y);\n  float em = exp(-z.y);\n  return vec2(cos(z.x) * 0.5 * (ep + em), -sin(z.x) * 0.5 * (ep - em));\n}\n",
            &[],
        ),
        "cpow" => (
            "vec2 cpow(vec2 a, vec2 b) {\n  if (a.x == 0.0 && a.y == 0.0) {\n    return (b.x == 0.0 && b.y == 0.0) ? vec2(1.0, 0.0) : vec2(0.0, 0.0);\n  }\n  return cexp(cmul(b, clog(a)));\n}\n",
            &["cexp", "cmul", "clog"],
        ),
        "rpowi" => (
            "float rpowi(float x, int n) {\n  float r = pow(abs(x), float(n));\n  if (x < 0.0 && mod(abs(float(n)), 2.0) == 1.0) {\n    r = -r;\n  }\n  return x == 0.0 && n == 0 ? 1.0 : r;\n}\n",
            &[],
        ),
        "hue" => (
            "vec3 hue(float h) {\n  h = mod(h, 1.0) * 6.0;\n  return clamp(vec3(abs(h - 3.0) - 1.0, 2.0 - abs(h - 2.0), 2.0 - abs(h - 4.0)), 0.0, 1.0);\n}\n",
            &[],
        ),
        _ => return None,
    })
}

/// Whether `t` maps to a built-in GLSL scalar or vector type.
pub fn is_native(t: &TypeTerm) -> bool {
    match t {
        TypeTerm::List(n, e) => (2..=4).contains(n) && matches!(**e, B | I | R),
        TypeTerm::ConstInt(_) => true,
        t => t.is_scalar(),
    }
}

fn unsupported(sig: &Signature) -> String {
    format!("{sig} has no shader implementation")
}

fn native_or_err(sig: &Signature) -> Result<(), String> {
    if sig.params.iter().chain([&sig.ret]).all(is_native) {
        Ok(())
    } else {
        Err(unsupported(sig))
    }
}

fn infix(op: &'static str) -> GlslFn {
    match op {
        "+" => |_, a, s| native_or_err(s).map(|_| format!("({} + {})", a[0], a[1])),
        "-" => |_, a, s| native_or_err(s).map(|_| format!("({} - {})", a[0], a[1])),
        "*" => |_, a, s| native_or_err(s).map(|_| format!("({} * {})", a[0], a[1])),
        "/" => |_, a, s| native_or_err(s).map(|_| format!("({} / {})", a[0], a[1])),
        "<" => |_, a, _| Ok(format!("({} < {})", a[0], a[1])),
        "<=" => |_, a, _| Ok(format!("({} <= {})", a[0], a[1])),
        ">" => |_, a, _| Ok(format!("({} > {})", a[0], a[1])),
        ">=" => |_, a, _| Ok(format!("({} >= {})", a[0], a[1])),
        "==" => |_, a, _| Ok(format!("({} == {})", a[0], a[1])),
        "!=" => |_, a, _| Ok(format!("({} != {})", a[0], a[1])),
        "&&" => |_, a, _| Ok(format!("({} && {})", a[0], a[1])),
        "||" => |_, a, _| Ok(format!("({} || {})", a[0], a[1])),
        _ => unreachable!("unknown infix operator"),
    }
}

fn call1(f: &'static str) -> GlslFn {
    match f {
        "sin" => |_, a, _| Ok(format!("sin({})", a[0])),
        "cos" => |_, a, _| Ok(format!("cos({})", a[0])),
        "tan" => |_, a, _| Ok(format!("tan({})", a[0])),
        "exp" => |_, a, _| Ok(format!("exp({})", a[0])),
        "log" => |_, a, _| Ok(format!("log({})", a[0])),
        "arctan" => |_, a, _| Ok(format!("atan({})", a[0])),
        "abs" => |_, a, _| Ok(format!("abs({})", a[0])),
        "length" => |_, a, s| native_or_err(s).map(|_| format!("length({})", a[0])),
        _ => unreachable!("unknown unary function"),
    }
}

fn helper1(h: &'static str) -> GlslFn {
    match h {
        "csqrt" => |s, a, _| {
            s.helper("csqrt");
            Ok(format!("csqrt({})", a[0]))
        },
        "csin" => |s, a, _| {
            s.helper("csin");
            Ok(format!("csin({})", a[0]))
        },
        "ccos" => |s, a, _| {
            s.helper("ccos");
            Ok(format!("ccos({})", a[0]))
        },
        "cexp" => |s, a, _| {
            s.helper("cexp");
            Ok(format!("cexp({})", a[0]))
        },
        "clog" => |s, a, _| {
            s.helper("clog");
            Ok(format!("clog({})", a[0]))
        },
        "hue" => |s, a, _| {
            s.helper("hue");
            Ok(format!("hue({})", a[0]))
        },
        _ => unreachable!("unknown helper"),
    }
}

fn no_glsl(_: &mut dyn GlslSink, _: &[String], sig: &Signature) -> Result<String, String> {
    Err(unsupported(sig))
}

fn reduce_glsl(
    sink: &mut dyn GlslSink,
    a: &[String],
    sig: &Signature,
    f: &str,
    int: bool,
) -> Result<String, String> {
    native_or_err(sig)?;
    let TypeTerm::List(n, _) = &sig.params[0] else {
        return Err(unsupported(sig));
    };
    let t = sink.temp(&a[0], &sig.params[0])?;
    let comp = |k: u32| {
        if int {
            format!("float({t}[{k}])")
        } else {
            format!("{t}[{k}]")
        }
    };
    let mut acc = comp(0);
    for k in 1..*n {
        acc = format!("{f}({acc}, {})", comp(k));
    }
    Ok(if int { format!("int({acc})") } else { acc })
}

fn unrolled_glsl(sink: &mut dyn GlslSink, a: &[String], sig: &Signature) -> Result<String, String> {
    let TypeTerm::ConstInt(k) = sig.params[1] else {
        return Err(unsupported(sig));
    };
    let complex = sig.params[0] == C;
    let one = if complex { "vec2(1.0, 0.0)" } else { "1.0" };
    if k == 0 {
        return Ok(one.to_string());
    }
    let t = sink.temp(&a[0], &sig.params[0])?;
    let mut acc = t.clone();
    for _ in 1..k.abs() {
        acc = if complex {
            sink.helper("cmul");
            format!("cmul({acc}, {t})")
        } else {
            format!("({acc} * {t})")
        };
    }
    if k < 0 {
        acc = if complex {
            sink.helper("cdiv");
            format!("cdiv({one}, {acc})")
        } else {
            format!("({one} / {acc})")
        };
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Table

fn ty(t: TypeTerm) -> Pat {
    Pat::Ty(t)
}

fn ls(t: TypeTerm) -> Pat {
    Pat::List(t)
}

fn ov(params: Vec<Pat>, ret: RetPat, cpu: CpuFn, glsl: GlslFn) -> Overload {
    Overload {
        params,
        ret,
        cpu,
        glsl,
    }
}

fn rt(t: TypeTerm) -> RetPat {
    RetPat::Ty(t)
}

fn rl(t: TypeTerm) -> RetPat {
    RetPat::List(t)
}

fn builtin(name: &'static str, overloads: Vec<Overload>) -> Builtin {
    Builtin {
        name,
        pure: true,
        overloads,
    }
}

fn build() -> Vec<Builtin> {
    let numeric = [I, R, C];
    let mut out = Vec::new();

    let additive = move |name: &'static str, op: Op, glsl: GlslFn| {
        let cpu: CpuFn = match op {
            Op::Add => |_, a| arith(Op::Add, &a[0], &a[1]),
            _ => |_, a| arith(Op::Sub, &a[0], &a[1]),
        };
        let mut ovs = Vec::new();
        for t in numeric.clone() {
            ovs.push(ov(vec![ty(t.clone()), ty(t.clone())], rt(t.clone()), cpu, glsl));
        }
        for t in numeric.clone() {
            ovs.push(ov(vec![ls(t.clone()), ls(t.clone())], rl(t.clone()), cpu, glsl));
        }
        builtin(name, ovs)
    };
    out.push(additive("+", Op::Add, infix("+")));
    out.push(additive("-", Op::Sub, infix("-")));

    let neg_glsl: GlslFn = |_, a, s| native_or_err(s).map(|_| format!("(-{})", a[0]));
    let neg_cpu: CpuFn = |_, a| negate(&a[0]);
    let mut neg = Vec::new();
    for t in [I, R, C] {
        neg.push(ov(vec![ty(t.clone())], rt(t.clone()), neg_cpu, neg_glsl));
        neg.push(ov(vec![ls(t.clone())], rl(t.clone()), neg_cpu, neg_glsl));
    }
    out.push(builtin("neg", neg));

    let mul_cpu: CpuFn = |_, a| arith(Op::Mul, &a[0], &a[1]);
    let cmul_glsl: GlslFn = |s, a, _| {
        s.helper("cmul");
        Ok(format!("cmul({}, {})", a[0], a[1]))
    };
    let dot_cpu: CpuFn = |_, a| dot(&a[0], &a[1]);
    out.push(builtin(
        "*",
        vec![
            ov(vec![ty(I), ty(I)], rt(I), mul_cpu, infix("*")),
            ov(vec![ty(R), ty(R)], rt(R), mul_cpu, infix("*")),
            ov(vec![ty(C), ty(C)], rt(C), mul_cpu, cmul_glsl),
            ov(vec![ty(I), ls(I)], rl(I), mul_cpu, infix("*")),
            ov(vec![ty(R), ls(R)], rl(R), mul_cpu, infix("*")),
            ov(vec![ty(C), ls(C)], rl(C), mul_cpu, no_glsl),
            ov(vec![ls(I), ty(I)], rl(I), mul_cpu, infix("*")),
            ov(vec![ls(R), ty(R)], rl(R), mul_cpu, infix("*")),
            ov(vec![ls(C), ty(C)], rl(C), mul_cpu, no_glsl),
            ov(
                vec![ls(I), ls(I)],
                rt(I),
                dot_cpu,
                |_, a, s| native_or_err(s).map(|_| format!("int(dot(vec{n}({}), vec{n}({})))", a[0], a[1], n = list_len(&s.params[0]))),
            ),
            ov(
                vec![ls(R), ls(R)],
                rt(R),
                dot_cpu,
                |_, a, s| native_or_err(s).map(|_| format!("dot({}, {})", a[0], a[1])),
            ),
            ov(vec![ls(C), ls(C)], rt(C), dot_cpu, no_glsl),
        ],
    ));

    let div_cpu: CpuFn = |_, a| arith(Op::Div, &a[0], &a[1]);
    out.push(builtin(
        "/",
        vec![
            ov(vec![ty(R), ty(R)], rt(R), div_cpu, infix("/")),
            ov(
                vec![ty(C), ty(C)],
                rt(C),
                div_cpu,
                |s, a, _| {
                    s.helper("cdiv");
                    Ok(format!("cdiv({}, {})", a[0], a[1]))
                },
            ),
            ov(vec![ls(R), ty(R)], rl(R), div_cpu, infix("/")),
            ov(vec![ls(C), ty(C)], rl(C), div_cpu, no_glsl),
        ],
    ));

    out.push(builtin(
        "^",
        vec![
            ov(
                vec![ty(R), Pat::SmallConst],
                rt(R),
                |_, a| Ok(Value::Real(unrolled_real(real(&a[0])?, int(&a[1])?))),
                unrolled_glsl,
            ),
            ov(
                vec![ty(C), Pat::SmallConst],
                rt(C),
                |_, a| Ok(Value::Complex(unrolled_complex(cplx(&a[0])?, int(&a[1])?))),
                unrolled_glsl,
            ),
            ov(
                vec![ty(R), ty(I)],
                rt(R),
                |_, a| Ok(Value::Real(powi_real(real(&a[0])?, int(&a[1])?))),
                |s, a, _| {
                    s.helper("rpowi");
                    Ok(format!("rpowi({}, {})", a[0], a[1]))
                },
            ),
            ov(
                vec![ty(C), ty(I)],
                rt(C),
                |_, a| {
                    let n = Complex64::new(int(&a[1])? as f64, 0.0);
                    Ok(Value::Complex(cmath::pow(cplx(&a[0])?, n)))
                },
                |s, a, _| {
                    s.helper("cpow");
                    Ok(format!("cpow({}, vec2(float({}), 0.0))", a[0], a[1]))
                },
            ),
            ov(
                vec![ty(R), ty(R)],
                rt(C),
                |_, a| Ok(Value::Complex(cmath::pow(cplx(&a[0])?, cplx(&a[1])?))),
                |s, a, _| {
                    s.helper("cpow");
                    Ok(format!("cpow(vec2({}, 0.0), vec2({}, 0.0))", a[0], a[1]))
                },
            ),
            ov(
                vec![ty(C), ty(C)],
                rt(C),
                |_, a| Ok(Value::Complex(cmath::pow(cplx(&a[0])?, cplx(&a[1])?))),
                |s, a, _| {
                    s.helper("cpow");
                    Ok(format!("cpow({}, {})", a[0], a[1]))
                },
            ),
        ],
    ));

    out.push(builtin(
        "sqrt",
        vec![
            ov(
                vec![ty(R)],
                rt(C),
                |_, a| Ok(Value::Complex(cmath::sqrt(cplx(&a[0])?))),
                |s, a, _| {
                    s.helper("csqrt");
                    Ok(format!("csqrt(vec2({}, 0.0))", a[0]))
                },
            ),
            ov(
                vec![ty(C)],
                rt(C),
                |_, a| Ok(Value::Complex(cmath::sqrt(cplx(&a[0])?))),
                helper1("csqrt"),
            ),
        ],
    ));

    out.push(builtin(
        "sin",
        vec![
            ov(vec![ty(R)], rt(R), |_, a| Ok(Value::Real(real(&a[0])?.sin())), call1("sin")),
            ov(vec![ty(C)], rt(C), |_, a| Ok(Value::Complex(cmath::sin(cplx(&a[0])?))), helper1("csin")),
        ],
    ));
    out.push(builtin(
        "cos",
        vec![
            ov(vec![ty(R)], rt(R), |_, a| Ok(Value::Real(real(&a[0])?.cos())), call1("cos")),
            ov(vec![ty(C)], rt(C), |_, a| Ok(Value::Complex(cmath::cos(cplx(&a[0])?))), helper1("ccos")),
        ],
    ));
    out.push(builtin(
        "exp",
        vec![
            ov(vec![ty(R)], rt(R), |_, a| Ok(Value::Real(real(&a[0])?.exp())), call1("exp")),
            ov(vec![ty(C)], rt(C), |_, a| Ok(Value::Complex(cmath::exp(cplx(&a[0])?))), helper1("cexp")),
        ],
    ));
    out.push(builtin(
        "log",
        vec![
            ov(vec![ty(R)], rt(R), |_, a| Ok(Value::Real(real(&a[0])?.ln())), call1("log")),
            ov(vec![ty(C)], rt(C), |_, a| Ok(Value::Complex(cmath::log(cplx(&a[0])?))), helper1("clog")),
        ],
    ));
    out.push(builtin(
        "tan",
        vec![ov(vec![ty(R)], rt(R), |_, a| Ok(Value::Real(real(&a[0])?.tan())), call1("tan"))],
    ));
    out.push(builtin(
        "arctan",
        vec![ov(vec![ty(R)], rt(R), |_, a| Ok(Value::Real(real(&a[0])?.atan())), call1("arctan"))],
    ));
    out.push(builtin(
        "arctan2",
        vec![ov(
            vec![ty(R), ty(R)],
            rt(R),
            |_, a| Ok(Value::Real(real(&a[0])?.atan2(real(&a[1])?))),
            |_, a, _| Ok(format!("atan({}, {})", a[0], a[1])),
        )],
    ));

    let norm_cpu: CpuFn = |_, a| Ok(Value::Real(norm(&a[0])?));
    out.push(builtin(
        "abs",
        vec![
            ov(
                vec![ty(I)],
                rt(I),
                |_, a| Ok(Value::Int(int(&a[0])?.wrapping_abs())),
                |_, a, _| Ok(format!("int(abs(float({})))", a[0])),
            ),
            ov(vec![ty(R)], rt(R), |_, a| Ok(Value::Real(real(&a[0])?.abs())), call1("abs")),
            ov(
                vec![ty(C)],
                rt(R),
                |_, a| {
                    let z = cplx(&a[0])?;
                    Ok(Value::Real((z.re * z.re + z.im * z.im).sqrt()))
                },
                call1("length"),
            ),
            ov(vec![ls(R)], rt(R), norm_cpu, call1("length")),
            ov(vec![ls(C)], rt(R), norm_cpu, no_glsl),
        ],
    ));

    out.push(builtin(
        "re",
        vec![ov(vec![ty(C)], rt(R), |_, a| Ok(Value::Real(cplx(&a[0])?.re)), |_, a, _| Ok(format!("{}.x", a[0])))],
    ));
    out.push(builtin(
        "im",
        vec![ov(vec![ty(C)], rt(R), |_, a| Ok(Value::Real(cplx(&a[0])?.im)), |_, a, _| Ok(format!("{}.y", a[0])))],
    ));
    out.push(builtin(
        "conjugate",
        vec![ov(
            vec![ty(C)],
            rt(C),
            |_, a| Ok(Value::Complex(cplx(&a[0])?.conj())),
            |_, a, _| Ok(format!("({} * vec2(1.0, -1.0))", a[0])),
        )],
    ));

    out.push(builtin("<", vec![ov(vec![ty(R), ty(R)], rt(B), |_, a| compare(&a[0], &a[1], |x, y| x < y), infix("<"))]));
    out.push(builtin("<=", vec![ov(vec![ty(R), ty(R)], rt(B), |_, a| compare(&a[0], &a[1], |x, y| x <= y), infix("<="))]));
    out.push(builtin(">", vec![ov(vec![ty(R), ty(R)], rt(B), |_, a| compare(&a[0], &a[1], |x, y| x > y), infix(">"))]));
    out.push(builtin(">=", vec![ov(vec![ty(R), ty(R)], rt(B), |_, a| compare(&a[0], &a[1], |x, y| x >= y), infix(">="))]));
    out.push(builtin(
        "==",
        vec![
            ov(vec![ty(R), ty(R)], rt(B), |_, a| compare(&a[0], &a[1], |x, y| x == y), infix("==")),
            ov(vec![ty(C), ty(C)], rt(B), |_, a| Ok(Value::Bool(cplx(&a[0])? == cplx(&a[1])?)), infix("==")),
        ],
    ));
    out.push(builtin(
        "!=",
        vec![
            ov(vec![ty(R), ty(R)], rt(B), |_, a| compare(&a[0], &a[1], |x, y| x != y), infix("!=")),
            ov(vec![ty(C), ty(C)], rt(B), |_, a| Ok(Value::Bool(cplx(&a[0])? != cplx(&a[1])?)), infix("!=")),
        ],
    ));
    out.push(builtin(
        "&",
        vec![ov(vec![ty(B), ty(B)], rt(B), |_, a| Ok(Value::Bool(boolean(&a[0])? && boolean(&a[1])?)), infix("&&"))],
    ));
    out.push(builtin(
        "%",
        vec![ov(vec![ty(B), ty(B)], rt(B), |_, a| Ok(Value::Bool(boolean(&a[0])? || boolean(&a[1])?)), infix("||"))],
    ));
    out.push(builtin(
        "not",
        vec![ov(vec![ty(B)], rt(B), |_, a| Ok(Value::Bool(!boolean(&a[0])?)), |_, a, _| Ok(format!("(!{})", a[0])))],
    ));

    out.push(builtin(
        "min",
        vec![
            ov(
                vec![ty(I), ty(I)],
                rt(I),
                |_, a| Ok(Value::Int(int(&a[0])?.min(int(&a[1])?))),
                |_, a, _| Ok(format!("int(min(float({}), float({})))", a[0], a[1])),
            ),
            ov(
                vec![ty(R), ty(R)],
                rt(R),
                |_, a| Ok(Value::Real(real(&a[0])?.min(real(&a[1])?))),
                |_, a, _| Ok(format!("min({}, {})", a[0], a[1])),
            ),
            ov(
                vec![ls(I)],
                rt(I),
                |_, a| Ok(Value::Int(fold_list(&a[0], f64::min)? as i32)),
                |s, a, sig| reduce_glsl(s, a, sig, "min", true),
            ),
            ov(
                vec![ls(R)],
                rt(R),
                |_, a| Ok(Value::Real(fold_list(&a[0], f64::min)?)),
                |s, a, sig| reduce_glsl(s, a, sig, "min", false),
            ),
        ],
    ));
    out.push(builtin(
        "max",
        vec![
            ov(
                vec![ty(I), ty(I)],
                rt(I),
                |_, a| Ok(Value::Int(int(&a[0])?.max(int(&a[1])?))),
                |_, a, _| Ok(format!("int(max(float({}), float({})))", a[0], a[1])),
            ),
            ov(
                vec![ty(R), ty(R)],
                rt(R),
                |_, a| Ok(Value::Real(real(&a[0])?.max(real(&a[1])?))),
                |_, a, _| Ok(format!("max({}, {})", a[0], a[1])),
            ),
            ov(
                vec![ls(I)],
                rt(I),
                |_, a| Ok(Value::Int(fold_list(&a[0], f64::max)? as i32)),
                |s, a, sig| reduce_glsl(s, a, sig, "max", true),
            ),
            ov(
                vec![ls(R)],
                rt(R),
                |_, a| Ok(Value::Real(fold_list(&a[0], f64::max)?)),
                |s, a, sig| reduce_glsl(s, a, sig, "max", false),
            ),
        ],
    ));

    out.push(builtin(
        "floor",
        vec![ov(vec![ty(R)], rt(I), |_, a| Ok(Value::Int(real(&a[0])?.floor() as i32)), |_, a, _| Ok(format!("int(floor({}))", a[0])))],
    ));
    out.push(builtin(
        "ceil",
        vec![ov(vec![ty(R)], rt(I), |_, a| Ok(Value::Int(real(&a[0])?.ceil() as i32)), |_, a, _| Ok(format!("int(ceil({}))", a[0])))],
    ));
    out.push(builtin(
        "round",
        vec![ov(
            vec![ty(R)],
            rt(I),
            |_, a| Ok(Value::Int((real(&a[0])? + 0.5).floor() as i32)),
            |_, a, _| Ok(format!("int(floor({} + 0.5))", a[0])),
        )],
    ));
    out.push(builtin(
        "mod",
        vec![
            ov(
                vec![ty(I), ty(I)],
                rt(I),
                |_, a| {
                    let (x, y) = (int(&a[0])?, int(&a[1])?);
                    if y == 0 {
                        return Err(runtime("integer modulo by zero"));
                    }
                    Ok(Value::Int(fmod_floor(x as f64, y as f64) as i32))
                },
                |_, a, _| Ok(format!("int(mod(float({}), float({})))", a[0], a[1])),
            ),
            ov(
                vec![ty(R), ty(R)],
                rt(R),
                |_, a| Ok(Value::Real(fmod_floor(real(&a[0])?, real(&a[1])?))),
                |_, a, _| Ok(format!("mod({}, {})", a[0], a[1])),
            ),
        ],
    ));

    out.push(Builtin {
        name: "seconds",
        pure: false,
        overloads: vec![ov(vec![], rt(R), |ctx, _| Ok(Value::Real(ctx.host.seconds())), no_glsl)],
    });

    let sample: CpuFn = |ctx, a| {
        let name = ctx
            .texture
            .ok_or_else(|| runtime("imagergb needs a texture name"))?;
        let coord = match &a[0] {
            Value::Complex(z) => [z.re, z.im],
            v => {
                let xs = items(v)?;
                [real(&xs[0])?, real(&xs[1])?]
            }
        };
        let px = ctx.host.sample(name, coord)?;
        Ok(rgb(px[0], px[1], px[2]))
    };
    out.push(Builtin {
        name: "imagergb",
        pure: false,
        overloads: vec![
            ov(vec![ty(TypeTerm::list(2, R))], rt(TypeTerm::list(3, R)), sample, no_glsl),
            ov(vec![ty(C)], rt(TypeTerm::list(3, R)), sample, no_glsl),
        ],
    });

    let l3 = || rt(TypeTerm::list(3, R));
    out.push(builtin(
        "red",
        vec![ov(vec![ty(R)], l3(), |_, a| Ok(rgb(real(&a[0])?, 0.0, 0.0)), |_, a, _| Ok(format!("vec3({}, 0.0, 0.0)", a[0])))],
    ));
    out.push(builtin(
        "green",
        vec![ov(vec![ty(R)], l3(), |_, a| Ok(rgb(0.0, real(&a[0])?, 0.0)), |_, a, _| Ok(format!("vec3(0.0, {}, 0.0)", a[0])))],
    ));
    out.push(builtin(
        "blue",
        vec![ov(vec![ty(R)], l3(), |_, a| Ok(rgb(0.0, 0.0, real(&a[0])?)), |_, a, _| Ok(format!("vec3(0.0, 0.0, {})", a[0])))],
    ));
    out.push(builtin(
        "gray",
        vec![ov(
            vec![ty(R)],
            l3(),
            |_, a| {
                let g = real(&a[0])?;
                Ok(rgb(g, g, g))
            },
            |_, a, _| Ok(format!("vec3({})", a[0])),
        )],
    ));
    out.push(builtin("hue", vec![ov(vec![ty(R)], l3(), |_, a| Ok(hue(real(&a[0])?)), helper1("hue"))]));

    out
}

fn list_len(t: &TypeTerm) -> u32 {
    match t {
        TypeTerm::List(n, _) => *n,
        _ => 0,
    }
}

/// Evaluates builtin `name` on concrete values: resolves the overload from the
/// dynamic argument types, up-casts the arguments and runs the CPU code.
pub fn call_cpu(name: &str, ctx: &CallCtx, args: &[Value]) -> Result<Value, BuiltinError> {
    let types: Vec<TypeTerm> = args.iter().map(Value::type_of).collect();
    let sig = min_sign(name, &types)?.ok_or_else(|| {
        runtime(format!(
            "no overload of `{name}` accepts ({})",
            types.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
        ))
    })?;
    call_sig(&sig, ctx, args)
}

/// Runs the CPU code of a resolved signature, up-casting arguments to its parameters.
pub fn call_sig(sig: &Signature, ctx: &CallCtx, args: &[Value]) -> Result<Value, BuiltinError> {
    let overload = registry().overload(sig);
    let cast: Vec<Value> = args
        .iter()
        .zip(&sig.params)
        .map(|(v, p)| {
            let from = v.type_of();
            let to = match p {
                TypeTerm::ConstInt(_) => I,
                p => p.clone(),
            };
            crate::types::embed_cast(&from, &to)
                .map(|c| c.apply(v))
                .map_err(|e| runtime(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    (overload.cpu)(ctx, &cast)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(name: &str, args: &[TypeTerm]) -> (Vec<TypeTerm>, TypeTerm) {
        let s = min_sign(name, args).unwrap().unwrap();
        (s.params, s.ret)
    }

    #[test]
    fn paper_min_signatures() {
        assert_eq!(sig("+", &[I, I]), (vec![I, I], I));
        assert_eq!(sig("+", &[C, I]), (vec![C, C], C));
        assert_eq!(sig("sqrt", &[I]), (vec![R], C));
    }

    #[test]
    fn constant_exponents_unroll() {
        let (params, ret) = sig("^", &[C, TypeTerm::ConstInt(2)]);
        assert_eq!(params, vec![C, TypeTerm::ConstInt(2)]);
        assert_eq!(ret, C);
        assert_eq!(sig("^", &[R, TypeTerm::ConstInt(20)]).0, vec![R, I]);
        assert_eq!(sig("^", &[R, R]).1, C);
    }

    #[test]
    fn list_overloads_share_length() {
        let v2 = TypeTerm::list(2, R);
        let v3 = TypeTerm::list(3, R);
        assert_eq!(sig("+", &[v2.clone(), TypeTerm::list(2, I)]).1, v2);
        assert_eq!(min_sign("+", &[v2.clone(), v3]).unwrap(), None);
        assert_eq!(sig("*", &[v2.clone(), v2.clone()]).1, R);
        assert_eq!(sig("*", &[I, v2.clone()]).1, v2);
        assert_eq!(sig("abs", &[TypeTerm::list(2, I)]), (vec![v2], R));
    }

    #[test]
    fn no_overload_is_none() {
        assert_eq!(min_sign("sin", &[TypeTerm::list(2, R)]).unwrap(), None);
        assert_eq!(min_sign("+", &[TypeTerm::Top, I]).unwrap(), None);
    }

    #[test]
    fn unknown_and_arity_errors() {
        assert!(matches!(min_sign("frobnicate", &[I]), Err(BuiltinError::UnknownBuiltin(_))));
        assert!(matches!(min_sign("sin", &[I, I]), Err(BuiltinError::ArityMismatch { .. })));
    }

    fn probes() -> Vec<TypeTerm> {
        let scalars = [B, I, TypeTerm::ConstInt(2), TypeTerm::ConstInt(-3), TypeTerm::ConstInt(40), R, C];
        let mut out: Vec<TypeTerm> = scalars.to_vec();
        for n in [2, 3, 5] {
            for e in [B, I, R, C] {
                out.push(TypeTerm::list(n, e));
            }
        }
        out.push(TypeTerm::list(2, TypeTerm::list(2, R)));
        out.push(TypeTerm::Top);
        out
    }

    fn tuples(arity: usize, probes: &[TypeTerm]) -> Vec<Vec<TypeTerm>> {
        let mut out = vec![Vec::new()];
        for _ in 0..arity {
            out = out
                .into_iter()
                .flat_map(|t| {
                    probes.iter().map(move |p| {
                        let mut t = t.clone();
                        t.push(p.clone());
                        t
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn every_resolution_is_unique_and_monotone() {
        let probes = probes();
        for b in registry().iter() {
            let mut arities: Vec<usize> = b.overloads.iter().map(|o| o.params.len()).collect();
            arities.dedup();
            for arity in arities {
                let all = tuples(arity, &probes);
                let resolved: Vec<Option<Signature>> = all
                    .iter()
                    .map(|args| min_sign(b.name, args).unwrap_or_else(|e| panic!("{e}")))
                    .collect();
                for (x, rx) in all.iter().zip(&resolved) {
                    for (y, ry) in all.iter().zip(&resolved) {
                        let below = x.iter().zip(y).all(|(p, q)| p.is_subtype(q));
                        if !below {
                            continue;
                        }
                        let tx = rx.as_ref().map_or(TypeTerm::Top, |s| s.ret.clone());
                        let ty = ry.as_ref().map_or(TypeTerm::Top, |s| s.ret.clone());
                        assert!(tx.is_subtype(&ty), "{} not monotone: {x:?} -> {tx}, {y:?} -> {ty}", b.name);
                    }
                }
            }
        }
    }

    #[test]
    fn complex_helpers_agree_with_num_complex() {
        let zs = [Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.5), Complex64::new(1.5, 0.0)];
        for z in zs {
            assert!((cmath::sqrt(z) - z.sqrt()).norm() < 1e-12);
            assert!((cmath::exp(z) - z.exp()).norm() < 1e-12);
            assert!((cmath::log(z) - z.ln()).norm() < 1e-12);
            assert!((cmath::sin(z) - z.sin()).norm() < 1e-12);
            assert!((cmath::cos(z) - z.cos()).norm() < 1e-12);
            assert!((cmath::mul(z, z) - z * z).norm() < 1e-12);
            assert!((cmath::div(z, z.conj()) - z / z.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn hue_primaries() {
        assert_eq!(hue(0.0), rgb(1.0, 0.0, 0.0));
        assert_eq!(hue(0.5), rgb(0.0, 1.0, 1.0));
    }

    #[test]
    fn every_helper_dependency_exists() {
        for name in ["cmul", "cdiv", "cexp", "clog", "csqrt", "csin", "ccos", "cpow", "rpowi", "hue"] {
            let (_, deps) = glsl_helper(name).unwrap();
            for d in deps {
                assert!(glsl_helper(d).is_some());
            }
        }
    }
}
