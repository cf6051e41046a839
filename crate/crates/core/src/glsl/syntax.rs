//! Tokens and syntax tree of the shader subset.

use super::{GTy, GlslError};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Punct(&'static str),
}

const PUNCT: &[&str] = &[
    "++", "--", "+=", "-=", "*=", "/=", "<=", ">=", "==", "!=", "&&", "||", "^^", "(", ")", "{", "}", "[", "]", ";",
    ",", ".", "+", "-", "*", "/", "<", ">", "!", "?", ":", "=",
];

pub fn lex(src: &str) -> Result<Vec<(Tok, usize)>, GlslError> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let err = |line, msg: String| GlslError::Syntax { line, msg };
    while i < b.len() {
        let c = b[i];
        if c == b'\n' {
            line += 1;
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if src[i..].starts_with("//") {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
        } else if src[i..].starts_with("/*") {
            let end = src[i + 2..].find("*/").ok_or_else(|| err(line, "unterminated comment".into()))?;
            line += src[i..i + 2 + end].matches('\n').count();
            i += end + 4;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), line));
        } else if c.is_ascii_digit() || (c == b'.' && b.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            let mut float = false;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i < b.len() && b[i] == b'.' {
                float = true;
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                float = true;
                i += 1;
                if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
                    i += 1;
                }
                let digits = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                if digits == i {
                    return Err(err(line, "malformed exponent".into()));
                }
            }
            let text = &src[start..i];
            let tok = if float {
                Tok::Float(text.parse().map_err(|_| err(line, format!("bad float `{text}`")))?)
            } else {
                Tok::Int(text.parse().map_err(|_| err(line, format!("bad integer `{text}`")))?)
            };
            out.push((tok, line));
        } else {
            let p = PUNCT
                .iter()
                .find(|p| src[i..].starts_with(**p))
                .ok_or_else(|| err(line, format!("unexpected character `{}`", c as char)))?;
            out.push((Tok::Punct(p), line));
            i += p.len();
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Xor,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Bool(bool),
    Ident(String),
    Call(String, Vec<Expr>),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Field(Box<Expr>, String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Decl {
        ty: GTy,
        name: String,
        init: Option<Expr>,
    },
    Assign {
        target: Expr,
        op: Option<BinOp>,
        value: Expr,
    },
    Step {
        target: Expr,
        delta: i64,
    },
    If {
        cond: Expr,
        then: Vec<Stmt>,
        otherwise: Option<Vec<Stmt>>,
    },
    For {
        init: Box<Stmt>,
        cond: Expr,
        step: Box<Stmt>,
        body: Vec<Stmt>,
    },
    Return(Option<Expr>),
    Block(Vec<Stmt>),
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Function {
    pub ret: GTy,
    pub name: String,
    pub params: Vec<(GTy, String)>,
    pub body: Vec<Stmt>,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Shader {
    pub float_precision: Option<String>,
    /// Type, name, array length and line.
    pub uniforms: Vec<(GTy, String, Option<usize>, usize)>,
    pub functions: Vec<Function>,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

pub fn parse(src: &str) -> Result<Shader, GlslError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    p.shader()
}

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map_or(1, |t| t.1)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, GlslError> {
        Err(GlslError::Syntax {
            line: self.line(),
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    fn is(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), GlslError> {
        if self.eat(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`, found {:?}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String, GlslError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {t:?}")),
        }
    }

    fn keyword(&mut self, k: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ty(&mut self) -> Result<GTy, GlslError> {
        let name = self.ident()?;
        match GTy::parse(&name) {
            Some(t) => Ok(t),
            None => self.err(format!("unknown type `{name}`")),
        }
    }

    fn at_type(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if GTy::parse(s).is_some())
            && matches!(self.peek_at(1), Some(Tok::Ident(_)))
    }

    fn shader(&mut self) -> Result<Shader, GlslError> {
        let mut sh = Shader::default();
        while self.peek().is_some() {
            let line = self.line();
            if self.keyword("precision") {
                let q = self.ident()?;
                if !matches!(q.as_str(), "highp" | "mediump" | "lowp") {
                    return self.err(format!("unknown precision `{q}`"));
                }
                let t = self.ident()?;
                self.expect(";")?;
                if t == "float" {
                    sh.float_precision = Some(q);
                }
            } else if self.keyword("uniform") {
                let t = self.ty()?;
                let name = self.ident()?;
                let mut len = None;
                if self.eat("[") {
                    let n = match self.peek() {
                        Some(&Tok::Int(n)) if n > 0 => n as usize,
                        _ => return self.err("array size must be a positive integer literal"),
                    };
                    self.pos += 1;
                    self.expect("]")?;
                    len = Some(n);
                }
                self.expect(";")?;
                sh.uniforms.push((t, name, len, line));
            } else {
                let ret = self.ty()?;
                let name = self.ident()?;
                self.expect("(")?;
                let mut params = Vec::new();
                if !self.eat(")") {
                    loop {
                        let t = self.ty()?;
                        if t == GTy::Void && self.is(")") {
                            self.pos += 1;
                            break;
                        }
                        params.push((t, self.ident()?));
                        if self.eat(")") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                let body = self.block()?;
                sh.functions.push(Function {
                    ret,
                    name,
                    params,
                    body,
                    line,
                });
            }
        }
        Ok(sh)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, GlslError> {
        self.expect("{")?;
        let mut out = Vec::new();
        while !self.eat("}") {
            if self.peek().is_none() {
                return self.err("unterminated block");
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, GlslError> {
        let line = self.line();
        let kind = if self.is("{") {
            StmtKind::Block(self.block()?)
        } else if self.keyword("if") {
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let then = self.body()?;
            let otherwise = if self.keyword("else") { Some(self.body()?) } else { None };
            StmtKind::If { cond, then, otherwise }
        } else if self.keyword("for") {
            self.expect("(")?;
            let init = Box::new(self.simple()?);
            self.expect(";")?;
            let cond = self.expr()?;
            self.expect(";")?;
            let step = Box::new(self.simple()?);
            self.expect(")")?;
            let body = self.body()?;
            StmtKind::For { init, cond, step, body }
        } else if self.keyword("return") {
            let e = if self.is(";") { None } else { Some(self.expr()?) };
            self.expect(";")?;
            StmtKind::Return(e)
        } else {
            let s = self.simple()?;
            self.expect(";")?;
            return Ok(s);
        };
        Ok(Stmt { kind, line })
    }

    /// A statement body: a block or a single statement.
    fn body(&mut self) -> Result<Vec<Stmt>, GlslError> {
        if self.is("{") {
            self.block()
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    /// Declaration, assignment, increment or expression, without the `;`.
    fn simple(&mut self) -> Result<Stmt, GlslError> {
        let line = self.line();
        if self.at_type() {
            let ty = self.ty()?;
            let name = self.ident()?;
            let init = if self.eat("=") { Some(self.expr()?) } else { None };
            return Ok(Stmt {
                kind: StmtKind::Decl { ty, name, init },
                line,
            });
        }
        for (p, delta) in [("++", 1), ("--", -1)] {
            if self.eat(p) {
                let target = self.unary()?;
                return Ok(Stmt {
                    kind: StmtKind::Step { target, delta },
                    line,
                });
            }
        }
        let e = self.expr()?;
        let ops = [
            ("=", None),
            ("+=", Some(BinOp::Add)),
            ("-=", Some(BinOp::Sub)),
            ("*=", Some(BinOp::Mul)),
            ("/=", Some(BinOp::Div)),
        ];
        for (p, op) in ops {
            if self.eat(p) {
                let value = self.expr()?;
                return Ok(Stmt {
                    kind: StmtKind::Assign { target: e, op, value },
                    line,
                });
            }
        }
        for (p, delta) in [("++", 1), ("--", -1)] {
            if self.eat(p) {
                return Ok(Stmt {
                    kind: StmtKind::Step { target: e, delta },
                    line,
                });
            }
        }
        Ok(Stmt {
            kind: StmtKind::Expr(e),
            line,
        })
    }

    pub fn expr(&mut self) -> Result<Expr, GlslError> {
        let c = self.binary(0)?;
        if self.eat("?") {
            let t = self.expr()?;
            self.expect(":")?;
            let e = self.expr()?;
            let line = c.line;
            return Ok(Expr {
                kind: ExprKind::Ternary(Box::new(c), Box::new(t), Box::new(e)),
                line,
            });
        }
        Ok(c)
    }

    fn binop(&self) -> Option<(BinOp, u8)> {
        let Some(Tok::Punct(p)) = self.peek() else { return None };
        Some(match *p {
            "||" => (BinOp::Or, 1),
            "^^" => (BinOp::Xor, 2),
            "&&" => (BinOp::And, 3),
            "==" => (BinOp::Eq, 4),
            "!=" => (BinOp::Ne, 4),
            "<" => (BinOp::Lt, 5),
            "<=" => (BinOp::Le, 5),
            ">" => (BinOp::Gt, 5),
            ">=" => (BinOp::Ge, 5),
            "+" => (BinOp::Add, 6),
            "-" => (BinOp::Sub, 6),
            "*" => (BinOp::Mul, 7),
            "/" => (BinOp::Div, 7),
            _ => return None,
        })
    }

    fn binary(&mut self, min: u8) -> Result<Expr, GlslError> {
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = self.binop() {
            if prec <= min {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(prec)?;
            let line = lhs.line;
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                line,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, GlslError> {
        let line = self.line();
        if self.eat("-") {
            let e = self.unary()?;
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(e)),
                line,
            });
        }
        if self.eat("+") {
            return self.unary();
        }
        if self.eat("!") {
            let e = self.unary()?;
            return Ok(Expr {
                kind: ExprKind::Not(Box::new(e)),
                line,
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, GlslError> {
        let mut e = self.primary()?;
        loop {
            let line = self.line();
            if self.eat("[") {
                let i = self.expr()?;
                self.expect("]")?;
                e = Expr {
                    kind: ExprKind::Index(Box::new(e), Box::new(i)),
                    line,
                };
            } else if self.eat(".") {
                let f = self.ident()?;
                e = Expr {
                    kind: ExprKind::Field(Box::new(e), f),
                    line,
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, GlslError> {
        let line = self.line();
        let kind = match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                ExprKind::Int(v)
            }
            Some(Tok::Float(v)) => {
                self.pos += 1;
                ExprKind::Float(v)
            }
            Some(Tok::Punct("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                return Ok(e);
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "true" => ExprKind::Bool(true),
                    "false" => ExprKind::Bool(false),
                    _ if self.eat("(") => {
                        let mut args = Vec::new();
                        if !self.eat(")") {
                            loop {
                                args.push(self.expr()?);
                                if self.eat(")") {
                                    break;
                                }
                                self.expect(",")?;
                            }
                        }
                        ExprKind::Call(name, args)
                    }
                    _ => ExprKind::Ident(name),
                }
            }
            t => return self.err(format!("unexpected {t:?}")),
        };
        Ok(Expr { kind, line })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_numbers_and_comments() {
        let t: Vec<Tok> = lex("1 2.5 .5 1e-3 3. // x\n/* y */ a_b").unwrap().into_iter().map(|t| t.0).collect();
        assert_eq!(
            t,
            vec![
                Tok::Int(1),
                Tok::Float(2.5),
                Tok::Float(0.5),
                Tok::Float(1e-3),
                Tok::Float(3.0),
                Tok::Ident("a_b".into())
            ]
        );
    }

    #[test]
    fn parses_shader_shape() {
        let sh = parse(
            "precision highp float;\nuniform float _u0;\nfloat f(float a) { return a * 2.0; }\nvoid main() {\n  float x = 1.0 + 2.0 * 3.0;\n  for (int k = 1; k <= 3; k++) { x += f(x); }\n  gl_FragColor = vec4(x);\n}\n",
        )
        .unwrap();
        assert_eq!(sh.float_precision.as_deref(), Some("highp"));
        assert_eq!(sh.uniforms.len(), 1);
        assert_eq!(sh.functions.len(), 2);
        let StmtKind::Decl { init: Some(e), .. } = &sh.functions[1].body[0].kind else { panic!() };
        assert!(matches!(&e.kind, ExprKind::Binary(BinOp::Add, _, r) if matches!(r.kind, ExprKind::Binary(BinOp::Mul, ..))));
    }

    #[test]
    fn reports_syntax_errors_with_lines() {
        let e = parse("void main() {\n  float x = ;\n}").unwrap_err();
        assert!(matches!(e, GlslError::Syntax { line: 2, .. }), "{e:?}");
    }
}
