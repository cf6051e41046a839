//! A GLSL ES 1.00 fragment shader subset: parser, validator and evaluator.
//!
//! The subset covers what the code generator emits: uniforms, helper
//! functions, scalar and vector arithmetic, `if`, counted `for` loops and
//! `texture2D`. The evaluator computes in double precision.

pub mod check;
pub mod eval;
pub mod syntax;

use std::fmt;

pub use check::{validate, Checked};
pub use eval::{Evaluator, Textures};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GTy {
    Void,
    Bool,
    Int,
    Float,
    Vec(u8),
    IVec(u8),
    BVec(u8),
    Sampler2D,
}

/// Component kind of a scalar or vector type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Base {
    Bool,
    Int,
    Float,
}

impl GTy {
    pub fn parse(word: &str) -> Option<GTy> {
        Some(match word {
            "void" => GTy::Void,
            "bool" => GTy::Bool,
            "int" => GTy::Int,
            "float" => GTy::Float,
            "vec2" => GTy::Vec(2),
            "vec3" => GTy::Vec(3),
            "vec4" => GTy::Vec(4),
            "ivec2" => GTy::IVec(2),
            "ivec3" => GTy::IVec(3),
            "ivec4" => GTy::IVec(4),
            "bvec2" => GTy::BVec(2),
            "bvec3" => GTy::BVec(3),
            "bvec4" => GTy::BVec(4),
            "sampler2D" => GTy::Sampler2D,
            _ => return None,
        })
    }

    pub fn base(self) -> Option<Base> {
        match self {
            GTy::Bool | GTy::BVec(_) => Some(Base::Bool),
            GTy::Int | GTy::IVec(_) => Some(Base::Int),
            GTy::Float | GTy::Vec(_) => Some(Base::Float),
            _ => None,
        }
    }

    /// Number of components; 0 for `void` and samplers.
    pub fn size(self) -> usize {
        match self {
            GTy::Bool | GTy::Int | GTy::Float => 1,
            GTy::Vec(n) | GTy::IVec(n) | GTy::BVec(n) => n as usize,
            _ => 0,
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(self, GTy::Vec(_) | GTy::IVec(_) | GTy::BVec(_))
    }

    pub fn is_scalar(self) -> bool {
        matches!(self, GTy::Bool | GTy::Int | GTy::Float)
    }

    /// Scalar or vector type with `base` components.
    pub fn with(base: Base, n: usize) -> GTy {
        match (base, n) {
            (Base::Bool, 1) => GTy::Bool,
            (Base::Int, 1) => GTy::Int,
            (Base::Float, 1) => GTy::Float,
            (Base::Bool, n) => GTy::BVec(n as u8),
            (Base::Int, n) => GTy::IVec(n as u8),
            (Base::Float, n) => GTy::Vec(n as u8),
        }
    }
}

impl fmt::Display for GTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GTy::Void => f.write_str("void"),
            GTy::Bool => f.write_str("bool"),
            GTy::Int => f.write_str("int"),
            GTy::Float => f.write_str("float"),
            GTy::Vec(n) => write!(f, "vec{n}"),
            GTy::IVec(n) => write!(f, "ivec{n}"),
            GTy::BVec(n) => write!(f, "bvec{n}"),
            GTy::Sampler2D => f.write_str("sampler2D"),
        }
    }
}

/// A scalar or vector value. Booleans are stored as 0/1 and integers exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GVal {
    pub ty: GTy,
    pub c: [f64; 4],
}

impl GVal {
    pub fn float(x: f64) -> GVal {
        GVal {
            ty: GTy::Float,
            c: [x, 0.0, 0.0, 0.0],
        }
    }

    pub fn int(x: i64) -> GVal {
        GVal {
            ty: GTy::Int,
            c: [x as f64, 0.0, 0.0, 0.0],
        }
    }

    pub fn bool(b: bool) -> GVal {
        GVal {
            ty: GTy::Bool,
            c: [b as u8 as f64, 0.0, 0.0, 0.0],
        }
    }

    pub fn vec(xs: &[f64]) -> GVal {
        let mut c = [0.0; 4];
        c[..xs.len()].copy_from_slice(xs);
        GVal {
            ty: GTy::with(Base::Float, xs.len()),
            c,
        }
    }

    pub fn zero(ty: GTy) -> GVal {
        GVal { ty, c: [0.0; 4] }
    }

    pub fn comps(&self) -> &[f64] {
        &self.c[..self.ty.size()]
    }

    pub fn truthy(&self) -> bool {
        self.c[0] != 0.0
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GlslError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
    #[error("runtime error: {0}")]
    Runtime(String),
}
