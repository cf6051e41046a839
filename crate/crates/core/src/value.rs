//! Runtime values of the scripting language.

use std::fmt;

use num_complex::Complex64;
use serde_json::json;

use crate::types::{embed_cast, TypeTerm};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i32),
    Real(f64),
    /// Stays complex even when the imaginary part is zero.
    Complex(Complex64),
    List(Vec<Value>),
}

impl Value {
    pub fn complex(re: f64, im: f64) -> Value {
        Value::Complex(Complex64::new(re, im))
    }

    pub fn reals(xs: &[f64]) -> Value {
        Value::List(xs.iter().map(|&x| Value::Real(x)).collect())
    }

    /// Builds a list, up-casting elements to their common type. Returns `None`
    /// when the elements have no common type (e.g. `[1, [2]]`).
    pub fn homogeneous_list(items: Vec<Value>) -> Option<Value> {
        if items.is_empty() {
            return Some(Value::List(items));
        }
        let types: Vec<TypeTerm> = items.iter().map(Value::type_of).collect();
        let target = TypeTerm::join_all(types.iter());
        if target == TypeTerm::Top {
            return None;
        }
        let items = items
            .into_iter()
            .zip(&types)
            .map(|(v, t)| embed_cast(t, &target).map(|c| c.apply(&v)))
            .collect::<Result<Vec<_>, _>>()
            .ok()?;
        Some(Value::List(items))
    }

    /// Dynamic type; lists report `List(n, join of element types)`.
    /// The empty list has no type (`Top`).
    pub fn type_of(&self) -> TypeTerm {
        match self {
            Value::Bool(_) => TypeTerm::Bool,
            Value::Int(_) => TypeTerm::Int,
            Value::Real(_) => TypeTerm::Real,
            Value::Complex(_) => TypeTerm::Complex,
            Value::List(items) => {
                if items.is_empty() {
                    return TypeTerm::Top;
                }
                let elem = TypeTerm::join_all(items.iter().map(Value::type_of).collect::<Vec<_>>().iter());
                TypeTerm::list(items.len() as u32, elem)
            }
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Bool(b) => Some(*b as i32 as f64),
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i32> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Bool(b) => Some(*b as i32),
            _ => None,
        }
    }

    pub fn as_complex(&self) -> Option<Complex64> {
        match self {
            Value::Complex(c) => Some(*c),
            other => other.as_f64().map(|r| Complex64::new(r, 0.0)),
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    /// Flattened real components in GLSL lowering order (complex → re, im).
    pub fn flatten(&self, out: &mut Vec<f64>) {
        match self {
            Value::Bool(b) => out.push(*b as i32 as f64),
            Value::Int(i) => out.push(*i as f64),
            Value::Real(r) => out.push(*r),
            Value::Complex(c) => {
                out.push(c.re);
                out.push(c.im);
            }
            Value::List(items) => items.iter().for_each(|v| v.flatten(out)),
        }
    }

    /// JSON encoding used in job bundles: scalars as numbers/bools, complex as
    /// `[re, im]`, lists as arrays.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Bool(b) => json!(b),
            Value::Int(i) => json!(i),
            Value::Real(r) => json!(r),
            Value::Complex(c) => json!([c.re, c.im]),
            Value::List(items) => serde_json::Value::Array(items.iter().map(Value::to_json).collect()),
        }
    }

    /// Inverse of [`Value::to_json`] guided by the expected type.
    pub fn from_json(v: &serde_json::Value, ty: &TypeTerm) -> Option<Value> {
        Some(match ty {
            TypeTerm::Bool => Value::Bool(v.as_bool()?),
            TypeTerm::Int | TypeTerm::ConstInt(_) => Value::Int(i32::try_from(v.as_i64()?).ok()?),
            TypeTerm::Real => Value::Real(v.as_f64()?),
            TypeTerm::Complex => {
                let a = v.as_array()?;
                Value::complex(a.first()?.as_f64()?, a.get(1)?.as_f64()?)
            }
            TypeTerm::List(n, e) => {
                let a = v.as_array()?;
                if a.len() != *n as usize {
                    return None;
                }
                Value::List(a.iter().map(|x| Value::from_json(x, e)).collect::<Option<_>>()?)
            }
            TypeTerm::Bot | TypeTerm::Top => return None,
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Complex(c) => {
                if c.im < 0.0 {
                    write!(f, "{} - i*{}", c.re, -c.im)
                } else {
                    write!(f, "{} + i*{}", c.re, c.im)
                }
            }
            Value::List(items) => {
                f.write_str("[")?;
                for (k, v) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_literal_lists_upcast() {
        let v = Value::homogeneous_list(vec![Value::Real(0.3), Value::Int(-1)]).unwrap();
        assert_eq!(v, Value::reals(&[0.3, -1.0]));
        assert_eq!(v.type_of(), TypeTerm::list(2, TypeTerm::Real));
        assert!(Value::homogeneous_list(vec![Value::Int(1), Value::List(vec![Value::Int(2)])]).is_none());
    }

    #[test]
    fn complex_never_narrows() {
        assert_eq!(Value::complex(2.0, 0.0).type_of(), TypeTerm::Complex);
    }

    #[test]
    fn json_round_trip() {
        let v = Value::List(vec![Value::complex(1.0, -2.0), Value::complex(0.5, 0.0)]);
        let t = v.type_of();
        assert_eq!(Value::from_json(&v.to_json(), &t), Some(v));
    }
}
