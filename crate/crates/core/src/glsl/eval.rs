//! Double-precision evaluation of validated shaders.

use super::check::{Builtin, Checked, IExpr, IStmt, Target};
use super::syntax::BinOp;
use super::{Base, GTy, GVal, GlslError};

/// Texture units as seen by `texture2D`.
pub trait Textures: Sync {
    /// Sample unit `unit` at normalized coordinate `uv`.
    fn sample(&self, unit: usize, uv: [f64; 2]) -> [f64; 4];
}

impl Textures for () {
    fn sample(&self, _: usize, _: [f64; 2]) -> [f64; 4] {
        [0.0; 4]
    }
}

/// Upper bound on loop iterations per loop, guarding against runaway shaders.
const MAX_LOOP: usize = 1 << 20;

pub struct Evaluator<'a> {
    prog: &'a Checked,
    /// Uniform values by declaration order; samplers hold their unit number.
    uniforms: Vec<GVal>,
    textures: &'a dyn Textures,
}

enum Flow {
    Next,
    Return(Option<GVal>),
}

struct Frame {
    locals: Vec<GVal>,
    frag_coord: GVal,
    frag_color: GVal,
}

fn runtime<T>(msg: impl Into<String>) -> Result<T, GlslError> {
    Err(GlslError::Runtime(msg.into()))
}

fn convert(x: f64, to: Base) -> f64 {
    match to {
        Base::Bool => (x != 0.0) as u8 as f64,
        Base::Int => (x as i32) as f64,
        Base::Float => x,
    }
}

fn wrap_int(x: f64) -> f64 {
    (x as i64 as i32) as f64
}

impl<'a> Evaluator<'a> {
    pub fn new(prog: &'a Checked, uniforms: Vec<GVal>, textures: &'a dyn Textures) -> Result<Evaluator<'a>, GlslError> {
        if uniforms.len() != prog.uniforms.len() {
            return runtime(format!("{} uniform values for {} uniforms", uniforms.len(), prog.uniforms.len()));
        }
        for ((name, ty), v) in prog.uniforms.iter().zip(&uniforms) {
            let expect = if *ty == GTy::Sampler2D { GTy::Int } else { *ty };
            if v.ty != expect {
                return runtime(format!("uniform `{name}` is {ty} but got a {} value", v.ty));
            }
        }
        Ok(Evaluator {
            prog,
            uniforms,
            textures,
        })
    }

    /// Runs `main` for the fragment at window coordinate `frag` and returns `gl_FragColor`.
    pub fn run(&self, frag: [f64; 2]) -> Result<[f64; 4], GlslError> {
        let main = &self.prog.funcs[self.prog.main];
        let mut f = Frame {
            locals: vec![GVal::zero(GTy::Float); main.slots as usize],
            frag_coord: GVal::vec(&[frag[0], frag[1], 0.5, 1.0]),
            frag_color: GVal::zero(GTy::Vec(4)),
        };
        self.block(&main.body, &mut f)?;
        Ok(f.frag_color.c)
    }

    fn block(&self, stmts: &[IStmt], f: &mut Frame) -> Result<Flow, GlslError> {
        for s in stmts {
            if let Flow::Return(v) = self.stmt(s, f)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn stmt(&self, s: &IStmt, f: &mut Frame) -> Result<Flow, GlslError> {
        match s {
            IStmt::Store { target, comps, value } => {
                let v = self.expr(value, f)?;
                let slot = match target {
                    Target::Local(k) => &mut f.locals[*k as usize],
                    Target::FragColor => &mut f.frag_color,
                };
                match comps {
                    None => *slot = v,
                    Some(cs) => {
                        for (i, &c) in cs.iter().enumerate() {
                            slot.c[c as usize] = v.c[i];
                        }
                    }
                }
                Ok(Flow::Next)
            }
            IStmt::If(c, t, e) => {
                if self.expr(c, f)?.truthy() {
                    self.block(t, f)
                } else {
                    self.block(e, f)
                }
            }
            IStmt::Loop { init, cond, step, body } => {
                self.stmt(init, f)?;
                let mut n = 0;
                while self.expr(cond, f)?.truthy() {
                    n += 1;
                    if n > MAX_LOOP {
                        return runtime("loop iteration limit exceeded");
                    }
                    if let Flow::Return(v) = self.block(body, f)? {
                        return Ok(Flow::Return(v));
                    }
                    self.stmt(step, f)?;
                }
                Ok(Flow::Next)
            }
            IStmt::Return(e) => Ok(Flow::Return(match e {
                Some(e) => Some(self.expr(e, f)?),
                None => None,
            })),
            IStmt::Eval(e) => self.expr(e, f).map(|_| Flow::Next),
        }
    }

    fn expr(&self, e: &IExpr, f: &mut Frame) -> Result<GVal, GlslError> {
        Ok(match e {
            IExpr::Const(v) => *v,
            IExpr::Local(k) => f.locals[*k as usize],
            IExpr::Uniform(k) => self.uniforms[*k as usize],
            IExpr::FragCoord => f.frag_coord,
            IExpr::FragColor => f.frag_color,
            IExpr::Call(k, args) => {
                let func = &self.prog.funcs[*k as usize];
                let mut callee = Frame {
                    locals: vec![GVal::zero(GTy::Float); func.slots as usize],
                    frag_coord: f.frag_coord,
                    frag_color: f.frag_color,
                };
                for (i, a) in args.iter().enumerate() {
                    callee.locals[i] = self.expr(a, f)?;
                }
                match self.block(&func.body, &mut callee)? {
                    Flow::Return(Some(v)) => v,
                    _ if func.ret == GTy::Void => GVal::zero(GTy::Void),
                    _ => return runtime(format!("`{}` ended without returning a value", func.name)),
                }
            }
            IExpr::Builtin(b, ty, args) => {
                let mut vals = [GVal::zero(GTy::Float); 3];
                for (i, a) in args.iter().enumerate() {
                    vals[i] = self.expr(a, f)?;
                }
                builtin(*b, *ty, &vals[..args.len()])
            }
            IExpr::Ctor(ty, args) => {
                let base = ty.base().expect("constructible type");
                let n = ty.size();
                let mut out = GVal::zero(*ty);
                if let [a] = args.as_slice() {
                    let v = self.expr(a, f)?;
                    if v.ty.is_scalar() {
                        let x = convert(v.c[0], base);
                        out.c[..n].fill(x);
                        return Ok(out);
                    }
                }
                let mut k = 0;
                for a in args {
                    let v = self.expr(a, f)?;
                    for &x in v.comps() {
                        if k < n {
                            out.c[k] = convert(x, base);
                            k += 1;
                        }
                    }
                }
                out
            }
            IExpr::Neg(x) => {
                let mut v = self.expr(x, f)?;
                let int = v.ty.base() == Some(Base::Int);
                for c in &mut v.c[..v.ty.size()] {
                    *c = if int { wrap_int(-*c) } else { -*c };
                }
                v
            }
            IExpr::Not(x) => GVal::bool(!self.expr(x, f)?.truthy()),
            IExpr::Bin(op, ty, l, r) => {
                if let BinOp::And | BinOp::Or = op {
                    let a = self.expr(l, f)?.truthy();
                    let short = matches!(op, BinOp::And) != a;
                    return Ok(GVal::bool(if short { a } else { self.expr(r, f)?.truthy() }));
                }
                let a = self.expr(l, f)?;
                let b = self.expr(r, f)?;
                binary(*op, *ty, a, b)
            }
            IExpr::Ternary(c, a, b) => {
                if self.expr(c, f)?.truthy() {
                    self.expr(a, f)?
                } else {
                    self.expr(b, f)?
                }
            }
            IExpr::Index(b, i) => {
                let v = self.expr(b, f)?;
                let k = self.expr(i, f)?.c[0];
                if k < 0.0 || k as usize >= v.ty.size() {
                    return runtime(format!("index {k} out of range for {}", v.ty));
                }
                let mut out = GVal::zero(GTy::with(v.ty.base().expect("vector"), 1));
                out.c[0] = v.c[k as usize];
                out
            }
            IExpr::Swizzle(b, idx, ty) => {
                let v = self.expr(b, f)?;
                let mut out = GVal::zero(*ty);
                for i in 0..ty.size() {
                    out.c[i] = v.c[idx[i] as usize];
                }
                out
            }
            IExpr::Texture(k, coord) => {
                let unit = self.uniforms[*k as usize].c[0] as usize;
                let p = self.expr(coord, f)?;
                let s = self.textures.sample(unit, [p.c[0], p.c[1]]);
                GVal { ty: GTy::Vec(4), c: s }
            }
        })
    }
}

fn binary(op: BinOp, ty: GTy, a: GVal, b: GVal) -> GVal {
    match op {
        BinOp::Eq | BinOp::Ne => {
            let eq = a.comps() == b.comps();
            GVal::bool(eq == (op == BinOp::Eq))
        }
        BinOp::Lt => GVal::bool(a.c[0] < b.c[0]),
        BinOp::Le => GVal::bool(a.c[0] <= b.c[0]),
        BinOp::Gt => GVal::bool(a.c[0] > b.c[0]),
        BinOp::Ge => GVal::bool(a.c[0] >= b.c[0]),
        BinOp::Xor => GVal::bool(a.truthy() != b.truthy()),
        BinOp::And | BinOp::Or => unreachable!("short-circuit operators are handled by the caller"),
        _ => {
            let int = ty.base() == Some(Base::Int);
            let mut out = GVal::zero(ty);
            for i in 0..ty.size() {
                let x = if a.ty.is_scalar() { a.c[0] } else { a.c[i] };
                let y = if b.ty.is_scalar() { b.c[0] } else { b.c[i] };
                out.c[i] = match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div if int => {
                        if y == 0.0 {
                            0.0
                        } else {
                            (x / y).trunc()
                        }
                    }
                    BinOp::Div => x / y,
                    _ => unreachable!(),
                };
                if int {
                    out.c[i] = wrap_int(out.c[i]);
                }
            }
            out
        }
    }
}

fn builtin(b: Builtin, ty: GTy, a: &[GVal]) -> GVal {
    let comp = |v: &GVal, i: usize| if v.ty.is_scalar() { v.c[0] } else { v.c[i] };
    let n = a[0].ty.size();
    let map = |f: &dyn Fn(usize) -> f64| {
        let mut out = GVal::zero(ty);
        for i in 0..ty.size() {
            out.c[i] = f(i);
        }
        out
    };
    match b {
        Builtin::Sin => map(&|i| a[0].c[i].sin()),
        Builtin::Cos => map(&|i| a[0].c[i].cos()),
        Builtin::Tan => map(&|i| a[0].c[i].tan()),
        Builtin::Exp => map(&|i| a[0].c[i].exp()),
        Builtin::Log => map(&|i| a[0].c[i].ln()),
        Builtin::Sqrt => map(&|i| a[0].c[i].sqrt()),
        Builtin::Abs => map(&|i| a[0].c[i].abs()),
        Builtin::Floor => map(&|i| a[0].c[i].floor()),
        Builtin::Ceil => map(&|i| a[0].c[i].ceil()),
        Builtin::Atan => map(&|i| a[0].c[i].atan()),
        Builtin::Atan2 => map(&|i| a[0].c[i].atan2(a[1].c[i])),
        Builtin::Pow => map(&|i| a[0].c[i].powf(a[1].c[i])),
        Builtin::Mod => map(&|i| {
            let (x, y) = (a[0].c[i], comp(&a[1], i));
            x - y * (x / y).floor()
        }),
        Builtin::Min => map(&|i| a[0].c[i].min(comp(&a[1], i))),
        Builtin::Max => map(&|i| a[0].c[i].max(comp(&a[1], i))),
        // NaN clamps to the lower bound.
        Builtin::Clamp => map(&|i| a[0].c[i].max(comp(&a[1], i)).min(comp(&a[2], i))),
        Builtin::Length => GVal::float((0..n).map(|i| a[0].c[i] * a[0].c[i]).sum::<f64>().sqrt()),
        Builtin::Dot => GVal::float((0..n).map(|i| a[0].c[i] * a[1].c[i]).sum()),
    }
}

#[cfg(test)]
mod tests {
    use super::super::validate;
    use super::*;

    fn run(body: &str, uniforms: Vec<GVal>) -> [f64; 4] {
        let src = format!("precision highp float;\nuniform float _u0;\nfloat twice(float a) {{ return 2.0 * a; }}\nvoid main() {{\n{body}\n}}\n");
        let prog = validate(&src).unwrap();
        Evaluator::new(&prog, uniforms, &()).unwrap().run([1.5, 2.5]).unwrap()
    }

    #[test]
    fn evaluates_arithmetic_and_calls() {
        let c = run(
            "vec2 p = gl_FragCoord.xy;\nfloat s = 0.0;\nfor (int k = 1; k <= 4; k++) { s += float(k); }\nint q = 7 / 2;\ngl_FragColor = vec4(twice(p.x), s, float(q), _u0);",
            vec![GVal::float(0.25)],
        );
        assert_eq!(c, [3.0, 10.0, 3.0, 0.25]);
    }

    #[test]
    fn vectors_swizzles_and_builtins() {
        let c = run(
            "vec3 v = vec3(1.0, 2.0, 2.0);\nv.zx = v.xz * 2.0;\nfloat l = length(vec2(3.0, 4.0));\ngl_FragColor = vec4(v.xy, l, mod(-1.0, 3.0));",
            vec![GVal::float(0.0)],
        );
        assert_eq!(c, [4.0, 2.0, 5.0, 2.0]);
    }

    #[test]
    fn clamp_maps_nan_to_lower_bound() {
        let c = run(
            "float z = 0.0;\ngl_FragColor = clamp(vec4(z / z, 2.0, -1.0, 0.5), 0.0, 1.0);",
            vec![GVal::float(0.0)],
        );
        assert_eq!(c, [0.0, 1.0, 0.0, 0.5]);
    }

    #[test]
    fn uniform_types_are_checked() {
        let prog = validate("precision highp float;\nuniform vec2 _u0;\nvoid main() {}").unwrap();
        assert!(Evaluator::new(&prog, vec![GVal::float(1.0)], &()).is_err());
    }
}
