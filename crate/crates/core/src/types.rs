//! The type lattice: type terms, the subtype order, joins and value embeddings.

use std::cmp::Ordering;
use std::fmt;

use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeTerm {
    /// No information yet.
    Bot,
    /// No static type exists.
    Top,
    Bool,
    Int,
    /// An integer whose value is part of its type (loop bounds, literal exponents).
    ConstInt(i32),
    Real,
    Complex,
    /// `List(n, elem)`. `elem` is never `Top`; `List(n, Bot)` only occurs while
    /// inference is still running.
    List(u32, Box<TypeTerm>),
}

use TypeTerm::*;

impl TypeTerm {
    /// Smart constructor collapsing `List(n, Top)` to `Top`.
    pub fn list(n: u32, elem: TypeTerm) -> TypeTerm {
        if elem == Top {
            Top
        } else {
            List(n, Box::new(elem))
        }
    }

    fn scalar_rank(&self) -> Option<u8> {
        match self {
            Bool => Some(0),
            Int | ConstInt(_) => Some(1),
            Real => Some(2),
            Complex => Some(3),
            _ => None,
        }
    }

    fn from_rank(rank: u8) -> TypeTerm {
        match rank {
            0 => Bool,
            1 => Int,
            2 => Real,
            _ => Complex,
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.scalar_rank().is_some()
    }

    pub fn is_list(&self) -> bool {
        matches!(self, List(..))
    }

    /// True if `Bot` occurs anywhere in the term.
    pub fn contains_bot(&self) -> bool {
        match self {
            Bot => true,
            List(_, e) => e.contains_bot(),
            _ => false,
        }
    }

    pub fn list_depth(&self) -> usize {
        match self {
            List(_, e) => 1 + e.list_depth(),
            _ => 0,
        }
    }

    pub fn elem(&self) -> Option<&TypeTerm> {
        match self {
            List(_, e) => Some(e),
            _ => None,
        }
    }

    /// `ConstInt(k)` widened to `Int`, recursively.
    pub fn forget_constants(&self) -> TypeTerm {
        match self {
            ConstInt(_) => Int,
            List(n, e) => List(*n, Box::new(e.forget_constants())),
            t => t.clone(),
        }
    }

    /// `self ⊑ other`.
    pub fn is_subtype(&self, other: &TypeTerm) -> bool {
        match (self, other) {
            (Bot, _) | (_, Top) => true,
            (Top, _) | (_, Bot) => false,
            (ConstInt(a), ConstInt(b)) => a == b,
            (_, ConstInt(_)) => false,
            (List(n, a), List(m, b)) => n == m && a.is_subtype(b),
            _ => match (self.scalar_rank(), other.scalar_rank()) {
                (Some(a), Some(b)) => {
                    // Bool sits below Int but not below any ConstInt.
                    a <= b
                }
                _ => false,
            },
        }
    }

    /// Least upper bound `self ⊔ other`.
    pub fn join(&self, other: &TypeTerm) -> TypeTerm {
        match (self, other) {
            (Bot, t) | (t, Bot) => t.clone(),
            (Top, _) | (_, Top) => Top,
            (ConstInt(a), ConstInt(b)) if a == b => ConstInt(*a),
            (List(n, a), List(m, b)) => {
                if n == m {
                    TypeTerm::list(*n, a.join(b))
                } else {
                    Top
                }
            }
            _ => match (self.scalar_rank(), other.scalar_rank()) {
                (Some(a), Some(b)) => {
                    let mut r = a.max(b);
                    // Bool ⊔ ConstInt(k) and ConstInt(j) ⊔ ConstInt(k) land on Int.
                    if matches!(self, ConstInt(_)) || matches!(other, ConstInt(_)) {
                        r = r.max(1);
                    }
                    TypeTerm::from_rank(r)
                }
                _ => Top,
            },
        }
    }

    pub fn join_all<'a>(types: impl IntoIterator<Item = &'a TypeTerm>) -> TypeTerm {
        types.into_iter().fold(Bot, |acc, t| acc.join(t))
    }

    /// Partial order as `Option<Ordering>`.
    pub fn compare(&self, other: &TypeTerm) -> Option<Ordering> {
        match (self.is_subtype(other), other.is_subtype(self)) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }

    /// Parses the canonical textual form produced by `Display`.
    pub fn parse(text: &str) -> Option<TypeTerm> {
        let t = text.trim();
        Some(match t {
            "bot" => Bot,
            "top" => Top,
            "bool" => Bool,
            "int" => Int,
            "real" => Real,
            "complex" => Complex,
            _ => {
                if let Some(rest) = t.strip_prefix("const<") {
                    let k = rest.strip_suffix('>')?.trim().parse().ok()?;
                    ConstInt(k)
                } else if let Some(rest) = t.strip_prefix("list<") {
                    let inner = rest.strip_suffix('>')?;
                    let (n, elem) = inner.split_once(',')?;
                    let n: u32 = n.trim().parse().ok()?;
                    if n == 0 {
                        return None;
                    }
                    let elem = TypeTerm::parse(elem)?;
                    if elem == Top {
                        return None;
                    }
                    List(n, Box::new(elem))
                } else {
                    return None;
                }
            }
        })
    }
}

impl fmt::Display for TypeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bot => f.write_str("bot"),
            Top => f.write_str("top"),
            Bool => f.write_str("bool"),
            Int => f.write_str("int"),
            ConstInt(k) => write!(f, "const<{k}>"),
            Real => f.write_str("real"),
            Complex => f.write_str("complex"),
            List(n, e) => write!(f, "list<{n}, {e}>"),
        }
    }
}

impl serde::Serialize for TypeTerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for TypeTerm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        TypeTerm::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad type `{s}`")))
    }
}

/// One step of a scalar embedding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CastStep {
    /// `false ↦ 0`, `true ↦ 1`.
    BoolToInt,
    IntToReal,
    /// `r ↦ (r, 0)`.
    RealToComplex,
}

/// The injective value embedding behind `from ⊑ to`.
#[derive(Clone, Debug, PartialEq)]
pub enum Cast {
    Identity,
    /// Composition of adjacent scalar steps, applied left to right.
    Chain(Vec<CastStep>),
    /// Apply `elem` to each of `len` list elements.
    Elementwise { len: u32, elem: Box<Cast> },
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CastError {
    #[error("{from} is not a subtype of {to}")]
    NotASubtype { from: TypeTerm, to: TypeTerm },
    #[error("no embedding into or out of {0}")]
    Degenerate(TypeTerm),
}

/// Embedding descriptor for `from ⊑ to`.
pub fn embed_cast(from: &TypeTerm, to: &TypeTerm) -> Result<Cast, CastError> {
    if !from.is_subtype(to) {
        return Err(CastError::NotASubtype {
            from: from.clone(),
            to: to.clone(),
        });
    }
    match (from, to) {
        (_, Top) => Err(CastError::Degenerate(Top)),
        (Bot, _) => Err(CastError::Degenerate(Bot)),
        _ if from == to => Ok(Cast::Identity),
        (List(n, a), List(_, b)) => {
            let elem = embed_cast(a, b)?;
            Ok(match elem {
                Cast::Identity => Cast::Identity,
                e => Cast::Elementwise {
                    len: *n,
                    elem: Box::new(e),
                },
            })
        }
        _ => {
            let lo = from.scalar_rank().expect("scalar");
            let hi = to.scalar_rank().expect("scalar");
            let steps: Vec<CastStep> = (lo..hi)
                .map(|r| match r {
                    0 => CastStep::BoolToInt,
                    1 => CastStep::IntToReal,
                    _ => CastStep::RealToComplex,
                })
                .collect();
            Ok(if steps.is_empty() {
                Cast::Identity
            } else {
                Cast::Chain(steps)
            })
        }
    }
}

impl Cast {
    pub fn is_identity(&self) -> bool {
        matches!(self, Cast::Identity)
    }

    /// Applies the embedding to a value of the source type.
    pub fn apply(&self, v: &Value) -> Value {
        match self {
            Cast::Identity => v.clone(),
            Cast::Chain(steps) => steps.iter().fold(v.clone(), |acc, s| s.apply(&acc)),
            Cast::Elementwise { elem, .. } => match v {
                Value::List(items) => Value::List(items.iter().map(|x| elem.apply(x)).collect()),
                other => other.clone(),
            },
        }
    }
}

impl CastStep {
    pub fn apply(&self, v: &Value) -> Value {
        match (self, v) {
            (CastStep::BoolToInt, Value::Bool(b)) => Value::Int(*b as i32),
            (CastStep::IntToReal, Value::Int(i)) => Value::Real(*i as f64),
            (CastStep::RealToComplex, Value::Real(r)) => Value::complex(*r, 0.0),
            (_, other) => other.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(n: u32, t: TypeTerm) -> TypeTerm {
        TypeTerm::list(n, t)
    }

    #[test]
    fn subtype_chain() {
        assert!(Int.is_subtype(&Complex));
        assert!(Bool.is_subtype(&Real));
        assert!(!Real.is_subtype(&Int));
        assert!(!list(2, Real).is_subtype(&list(3, Real)));
        assert!(list(2, Int).is_subtype(&list(2, Complex)));
        assert!(ConstInt(7).is_subtype(&ConstInt(7)));
        assert!(!ConstInt(7).is_subtype(&ConstInt(8)));
        assert!(ConstInt(7).is_subtype(&Int));
        assert!(!Bool.is_subtype(&ConstInt(0)));
        assert!(!Int.is_subtype(&ConstInt(0)));
    }

    #[test]
    fn joins() {
        assert_eq!(Int.join(&Real), Real);
        assert_eq!(Bot.join(&Complex), Complex);
        assert_eq!(list(5, Complex).join(&list(5, Real)), list(5, Complex));
        assert_eq!(list(2, Real).join(&list(3, Real)), Top);
        assert_eq!(
            list(2, list(2, Int)).join(&list(2, list(2, Real))),
            list(2, list(2, Real))
        );
        assert_eq!(ConstInt(3).join(&ConstInt(3)), ConstInt(3));
        assert_eq!(ConstInt(3).join(&ConstInt(4)), Int);
        assert_eq!(ConstInt(3).join(&Bool), Int);
        assert_eq!(ConstInt(3).join(&Real), Real);
        assert_eq!(Int.join(&list(1, Int)), Top);
        assert_eq!(list(2, Bot).join(&list(2, Int)), list(2, Int));
    }

    #[test]
    fn list_of_top_collapses() {
        assert_eq!(TypeTerm::list(4, Top), Top);
    }

    #[test]
    fn text_round_trip() {
        for t in [
            Bot,
            Top,
            Bool,
            Int,
            ConstInt(-7),
            Real,
            Complex,
            list(3, Real),
            list(2, list(4, Complex)),
        ] {
            assert_eq!(TypeTerm::parse(&t.to_string()), Some(t));
        }
        assert_eq!(list(3, Real).to_string(), "list<3, real>");
        assert_eq!(ConstInt(7).to_string(), "const<7>");
        assert_eq!(TypeTerm::parse("list<0, int>"), None);
    }

    #[test]
    fn casts() {
        assert_eq!(
            embed_cast(&Int, &Complex).unwrap(),
            Cast::Chain(vec![CastStep::IntToReal, CastStep::RealToComplex])
        );
        assert_eq!(embed_cast(&Real, &Real).unwrap(), Cast::Identity);
        assert_eq!(embed_cast(&ConstInt(4), &Int).unwrap(), Cast::Identity);
        assert_eq!(
            embed_cast(&list(3, Int), &list(3, Complex)).unwrap(),
            Cast::Elementwise {
                len: 3,
                elem: Box::new(Cast::Chain(vec![CastStep::IntToReal, CastStep::RealToComplex]))
            }
        );
        assert!(matches!(
            embed_cast(&Real, &Int),
            Err(CastError::NotASubtype { .. })
        ));
        assert!(embed_cast(&Int, &Top).is_err());
        let v = embed_cast(&Bool, &Complex).unwrap().apply(&Value::Bool(true));
        assert_eq!(v, Value::complex(1.0, 0.0));
    }
}
