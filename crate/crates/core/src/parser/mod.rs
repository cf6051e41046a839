//! Recursive-descent parser with Pratt-style operator precedence.
//!
//! Precedence, loosest first: `;` sequencing, `=`/`:=` (right associative),
//! `&`/`%`, comparisons, `+ -`, `* /`, prefix `-`/`!`, `^` (right
//! associative), postfix `_k` and `.x/.y/.z`. A `|` in operand position opens
//! a norm and the next `|` that cannot continue an expression closes it.

pub mod lexer;

pub use lexer::{tokenize, LexError, Token, TokenKind};

use crate::ast::{IdGen, Node, NodeKind, Number, Program, ProgramError, Span};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("expected {expected}, found {found} at {}..{}", span.start, span.end)]
pub struct ParseError {
    pub expected: String,
    pub found: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SyntaxError {
    #[error("lex error: {0}")]
    Lex(#[from] LexError),
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Program(#[from] ProgramError),
}

impl SyntaxError {
    pub fn span(&self) -> Option<Span> {
        match self {
            SyntaxError::Lex(e) => Some(e.span),
            SyntaxError::Parse(e) => Some(e.span),
            SyntaxError::Program(e) => e.span(),
        }
    }
}

/// Tokenizes and parses `source`.
pub fn parse_source(source: &str) -> Result<Program, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser::new(&tokens, source.len());
    let statements = parser.program()?;
    Ok(Program::new(statements, parser.ids.peek())?)
}

/// Parses a token stream produced by [`tokenize`].
pub fn parse(tokens: &[Token]) -> Result<Program, SyntaxError> {
    let end = tokens.last().map_or(0, |t| t.span.end);
    let mut parser = Parser::new(tokens, end);
    let statements = parser.program()?;
    Ok(Program::new(statements, parser.ids.peek())?)
}

const PREFIX_BP: u8 = 12;

struct Parser<'t> {
    tokens: &'t [Token],
    cursor: usize,
    source_len: usize,
    ids: IdGen,
}

impl<'t> Parser<'t> {
    fn new(tokens: &'t [Token], source_len: usize) -> Parser<'t> {
        Parser {
            tokens,
            cursor: 0,
            source_len,
            ids: IdGen::starting_at(0),
        }
    }

    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.cursor).map(|t| &t.kind)
    }

    fn here(&self) -> Span {
        match self.tokens.get(self.cursor) {
            Some(t) => t.span,
            None => Span::new(self.source_len, self.source_len),
        }
    }

    fn prev_end(&self) -> usize {
        if self.cursor == 0 {
            0
        } else {
            self.tokens[self.cursor - 1].span.end
        }
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.cursor];
        self.cursor += 1;
        t
    }

    fn error<T>(&self, expected: impl Into<String>) -> Result<T, ParseError> {
        let found = match self.tokens.get(self.cursor) {
            Some(t) => t.kind.to_string(),
            None => "end of input".to_string(),
        };
        Err(ParseError {
            expected: expected.into(),
            found,
            span: self.here(),
        })
    }

    fn expect(&mut self, kind: TokenKind) -> Result<&'t Token, ParseError> {
        if self.peek() == Some(&kind) {
            Ok(self.bump())
        } else {
            self.error(kind.to_string())
        }
    }

    fn node(&mut self, kind: NodeKind, span: Span) -> Node {
        Node::new(self.ids.fresh(), kind, span)
    }

    fn program(&mut self) -> Result<Vec<Node>, ParseError> {
        let items = if self.peek().is_none() {
            Vec::new()
        } else {
            self.seq_items()?
        };
        if self.peek().is_some() {
            return self.error("`;` or end of input");
        }
        Ok(items)
    }

    /// `expr (';' expr)* ';'*`, stopping before `)`, `]`, `,` or end of input.
    fn seq_items(&mut self) -> Result<Vec<Node>, ParseError> {
        let mut items = vec![self.expr(0)?];
        while self.peek() == Some(&TokenKind::Semi) {
            while self.peek() == Some(&TokenKind::Semi) {
                self.bump();
            }
            match self.peek() {
                None | Some(TokenKind::RParen) | Some(TokenKind::RBracket) | Some(TokenKind::Comma) => {
                    break
                }
                _ => items.push(self.expr(0)?),
            }
        }
        Ok(items)
    }

    fn seq(&mut self) -> Result<Node, ParseError> {
        let mut items = self.seq_items()?;
        if items.len() == 1 {
            return Ok(items.pop().unwrap());
        }
        let span = items[0].span.to(items[items.len() - 1].span);
        Ok(self.node(NodeKind::Seq(items), span))
    }

    fn expr(&mut self, min_bp: u8) -> Result<Node, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let Some(tok) = self.peek() else { break };
            match tok {
                TokenKind::Underscore | TokenKind::Dot => {
                    if 17 < min_bp {
                        break;
                    }
                    lhs = self.postfix(lhs)?;
                    continue;
                }
                _ => {}
            }
            let Some((l_bp, r_bp)) = infix_bp(tok) else { break };
            if l_bp < min_bp {
                break;
            }
            let op = self.bump();
            let rhs = self.expr(r_bp)?;
            let span = lhs.span.to(rhs.span);
            lhs = match &op.kind {
                TokenKind::Assign => match lhs.kind {
                    NodeKind::Var(target) => self.node(
                        NodeKind::Assign {
                            target,
                            value: Box::new(rhs),
                        },
                        span,
                    ),
                    _ => {
                        return Err(ParseError {
                            expected: "variable on the left of `=`".into(),
                            found: "expression".into(),
                            span: lhs.span,
                        })
                    }
                },
                TokenKind::Define => self.definition(lhs, rhs, span)?,
                kind => {
                    let name = binary_name(kind).to_string();
                    self.node(
                        NodeKind::Call {
                            name,
                            args: vec![lhs, rhs],
                        },
                        span,
                    )
                }
            };
        }
        Ok(lhs)
    }

    fn definition(&mut self, head: Node, body: Node, span: Span) -> Result<Node, ParseError> {
        let bad = |s: Span| ParseError {
            expected: "function head `name(param, ...)` before `:=`".into(),
            found: "expression".into(),
            span: s,
        };
        let NodeKind::Call { name, args } = head.kind else {
            return Err(bad(head.span));
        };
        let mut params = Vec::new();
        for a in args {
            match a.kind {
                NodeKind::Var(p) => params.push(p),
                _ => return Err(bad(a.span)),
            }
        }
        Ok(self.node(
            NodeKind::FunDef {
                name,
                params,
                body: Box::new(body),
            },
            span,
        ))
    }

    fn postfix(&mut self, base: Node) -> Result<Node, ParseError> {
        let op = self.bump();
        if op.kind == TokenKind::Dot {
            let field_span = self.here();
            let k = match self.peek() {
                Some(TokenKind::Ident(f)) if f == "x" => 1,
                Some(TokenKind::Ident(f)) if f == "y" => 2,
                Some(TokenKind::Ident(f)) if f == "z" => 3,
                _ => return self.error("field `x`, `y` or `z`"),
            };
            self.bump();
            let index = self.node(NodeKind::Number(Number::Int(k)), field_span);
            let span = base.span.to(field_span);
            return Ok(self.node(
                NodeKind::Index {
                    base: Box::new(base),
                    index: Box::new(index),
                },
                span,
            ));
        }
        let index = self.expr(18)?;
        let span = base.span.to(index.span);
        Ok(self.node(
            NodeKind::Index {
                base: Box::new(base),
                index: Box::new(index),
            },
            span,
        ))
    }

    fn prefix(&mut self) -> Result<Node, ParseError> {
        let Some(tok) = self.tokens.get(self.cursor) else {
            return self.error("expression");
        };
        let start = tok.span;
        match &tok.kind {
            TokenKind::Int(v) => {
                self.bump();
                let v = i32::try_from(*v).map_err(|_| ParseError {
                    expected: "32-bit integer".into(),
                    found: tok.lexeme.clone(),
                    span: start,
                })?;
                Ok(self.node(NodeKind::Number(Number::Int(v)), start))
            }
            TokenKind::Real(v) => {
                self.bump();
                Ok(self.node(NodeKind::Number(Number::Real(*v)), start))
            }
            TokenKind::True | TokenKind::False => {
                self.bump();
                Ok(self.node(NodeKind::Bool(tok.kind == TokenKind::True), start))
            }
            TokenKind::Str(s) => {
                self.bump();
                Ok(self.node(NodeKind::Str(s.clone()), start))
            }
            TokenKind::Ident(name) => {
                self.bump();
                if self.peek() == Some(&TokenKind::LParen) {
                    self.call(name.clone(), start)
                } else {
                    Ok(self.node(NodeKind::Var(name.clone()), start))
                }
            }
            TokenKind::LParen => {
                self.bump();
                let mut items = vec![self.seq()?];
                while self.peek() == Some(&TokenKind::Comma) {
                    self.bump();
                    items.push(self.seq()?);
                }
                self.expect(TokenKind::RParen)?;
                let span = Span::new(start.start, self.prev_end());
                if items.len() == 1 {
                    let mut inner = items.pop().unwrap();
                    if matches!(inner.kind, NodeKind::Seq(_)) {
                        inner.span = span;
                    }
                    Ok(inner)
                } else {
                    Ok(self.node(NodeKind::List(items), span))
                }
            }
            TokenKind::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if self.peek() != Some(&TokenKind::RBracket) {
                    items.push(self.expr(0)?);
                    while self.peek() == Some(&TokenKind::Comma) {
                        self.bump();
                        items.push(self.expr(0)?);
                    }
                }
                self.expect(TokenKind::RBracket)?;
                let span = Span::new(start.start, self.prev_end());
                Ok(self.node(NodeKind::List(items), span))
            }
            TokenKind::Bar => {
                self.bump();
                let inner = self.expr(0)?;
                self.expect(TokenKind::Bar)?;
                let span = Span::new(start.start, self.prev_end());
                Ok(self.node(
                    NodeKind::Call {
                        name: "abs".into(),
                        args: vec![inner],
                    },
                    span,
                ))
            }
            TokenKind::Minus => {
                self.bump();
                let operand = self.expr(PREFIX_BP)?;
                let span = start.to(operand.span);
                Ok(match operand.kind {
                    NodeKind::Number(Number::Int(v)) if v != i32::MIN => {
                        Node::new(operand.id, NodeKind::Number(Number::Int(-v)), span)
                    }
                    NodeKind::Number(Number::Real(v)) => {
                        Node::new(operand.id, NodeKind::Number(Number::Real(-v)), span)
                    }
                    _ => self.node(
                        NodeKind::Call {
                            name: "neg".into(),
                            args: vec![operand],
                        },
                        span,
                    ),
                })
            }
            TokenKind::Plus => {
                self.bump();
                self.expr(PREFIX_BP)
            }
            TokenKind::Not => {
                self.bump();
                let operand = self.expr(PREFIX_BP)?;
                let span = start.to(operand.span);
                Ok(self.node(
                    NodeKind::Call {
                        name: "not".into(),
                        args: vec![operand],
                    },
                    span,
                ))
            }
            _ => self.error("expression"),
        }
    }

    fn call(&mut self, name: String, start: Span) -> Result<Node, ParseError> {
        self.expect(TokenKind::LParen)?;
        let mut args = Vec::new();
        if self.peek() != Some(&TokenKind::RParen) {
            args.push(self.seq()?);
            while self.peek() == Some(&TokenKind::Comma) {
                self.bump();
                args.push(self.seq()?);
            }
        }
        self.expect(TokenKind::RParen)?;
        let span = Span::new(start.start, self.prev_end());
        let argc = args.len();
        let arity_error = |expected: &str| ParseError {
            expected: expected.into(),
            found: format!("{argc} arguments"),
            span,
        };
        let kind = match name.as_str() {
            "if" => {
                if !(2..=3).contains(&args.len()) {
                    return Err(arity_error("2 or 3 arguments to `if`"));
                }
                let mut it = args.into_iter();
                NodeKind::If {
                    cond: Box::new(it.next().unwrap()),
                    then: Box::new(it.next().unwrap()),
                    otherwise: it.next().map(Box::new),
                }
            }
            "repeat" => {
                if args.len() != 2 {
                    return Err(arity_error("2 arguments to `repeat`"));
                }
                let mut it = args.into_iter();
                NodeKind::Repeat {
                    count: Box::new(it.next().unwrap()),
                    body: Box::new(it.next().unwrap()),
                }
            }
            "apply" => match args.len() {
                2 => {
                    let mut it = args.into_iter();
                    NodeKind::Apply {
                        list: Box::new(it.next().unwrap()),
                        var: "#".into(),
                        body: Box::new(it.next().unwrap()),
                    }
                }
                3 => {
                    let mut it = args.into_iter();
                    let list = it.next().unwrap();
                    let var_node = it.next().unwrap();
                    let NodeKind::Var(var) = var_node.kind else {
                        return Err(ParseError {
                            expected: "variable name as second argument of `apply`".into(),
                            found: "expression".into(),
                            span: var_node.span,
                        });
                    };
                    NodeKind::Apply {
                        list: Box::new(list),
                        var,
                        body: Box::new(it.next().unwrap()),
                    }
                }
                _ => return Err(arity_error("2 or 3 arguments to `apply`")),
            },
            _ => NodeKind::Call { name, args },
        };
        Ok(self.node(kind, span))
    }
}

fn infix_bp(tok: &TokenKind) -> Option<(u8, u8)> {
    use TokenKind::*;
    Some(match tok {
        Assign | Define => (2, 1),
        And | Or => (4, 5),
        Eq | Ne | Lt | Le | Gt | Ge => (6, 7),
        Plus | Minus => (8, 9),
        Star | Slash => (10, 11),
        Caret => (15, 14),
        _ => return None,
    })
}

fn binary_name(tok: &TokenKind) -> &'static str {
    use TokenKind::*;
    match tok {
        And => "&",
        Or => "%",
        Eq => "==",
        Ne => "!=",
        Lt => "<",
        Le => "<=",
        Gt => ">",
        Ge => ">=",
        Plus => "+",
        Minus => "-",
        Star => "*",
        Slash => "/",
        Caret => "^",
        _ => unreachable!("not a binary operator"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(src: &str) -> Node {
        parse_source(src).unwrap().as_body()
    }

    fn call_parts(n: &Node) -> (&str, &[Node]) {
        match &n.kind {
            NodeKind::Call { name, args } => (name, args),
            k => panic!("not a call: {k:?}"),
        }
    }

    #[test]
    fn wave_tree_shape() {
        let root = body("1/2+1/2*sin(|#|-seconds())");
        let (op, args) = call_parts(&root);
        assert_eq!(op, "+");
        assert_eq!(args[0].to_source(), "1/2");
        assert_eq!(args[1].to_source(), "1/2*sin(|#|-seconds())");
    }

    #[test]
    fn paper_sequence() {
        let p = parse_source("a = -2; b = sqrt(a); a = b + 1;").unwrap();
        assert_eq!(p.statements.len(), 3);
        assert!(p
            .statements
            .iter()
            .all(|s| matches!(s.kind, NodeKind::Assign { .. })));
        assert!(matches!(
            &p.statements[0].kind,
            NodeKind::Assign { value, .. } if value.kind == NodeKind::Number(Number::Int(-2))
        ));
    }

    #[test]
    fn power_is_right_associative() {
        let root = body("2^3^2");
        let (op, args) = call_parts(&root);
        assert_eq!(op, "^");
        assert_eq!(args[0].kind, NodeKind::Number(Number::Int(2)));
        assert_eq!(call_parts(&args[1]).0, "^");
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let root = body("-x^2");
        let (op, args) = call_parts(&root);
        assert_eq!(op, "neg");
        assert_eq!(call_parts(&args[0]).0, "^");
        let folded = body("-2^2");
        assert_eq!(call_parts(&folded).0, "neg");
    }

    #[test]
    fn nested_bars() {
        let root = body("|P-A|/|P-B|");
        let (op, args) = call_parts(&root);
        assert_eq!(op, "/");
        assert_eq!(call_parts(&args[0]).0, "abs");
        assert_eq!(call_parts(&args[1]).0, "abs");
        let nested = body("||x|-1|");
        assert_eq!(nested.to_source(), "||x|-1|");
    }

    #[test]
    fn special_forms() {
        assert!(matches!(body("if(c, 1, 2)").kind, NodeKind::If { otherwise: Some(_), .. }));
        assert!(matches!(body("if(c, 1)").kind, NodeKind::If { otherwise: None, .. }));
        assert!(matches!(body("repeat(5, r = r + #)").kind, NodeKind::Repeat { .. }));
        assert!(matches!(body("apply(l, d, d*2)").kind, NodeKind::Apply { .. }));
        assert!(matches!(body("P.x").kind, NodeKind::Index { .. }));
        assert!(matches!(body("(1, 2, 3)").kind, NodeKind::List(ref v) if v.len() == 3));
    }

    #[test]
    fn function_definition() {
        let p = parse_source("f(P) := (x = P.x; y = P.y; x^3 - y^2); f([1,2])").unwrap();
        assert_eq!(p.functions.len(), 1);
        let f = p.function("f", 1).unwrap();
        assert_eq!(f.params, vec!["P".to_string()]);
        assert_eq!(
            f.locals().into_iter().collect::<Vec<_>>(),
            vec!["x".to_string(), "y".to_string()]
        );
    }

    #[test]
    fn sequences_inside_arguments() {
        let root = body("if(1-x^2-y^2>=0, s = (x,y,-|sqrt(1-x^2-y^2)|); s*l, bg)");
        let NodeKind::If { then, .. } = &root.kind else { panic!() };
        assert!(matches!(then.kind, NodeKind::Seq(ref v) if v.len() == 2));
    }

    #[test]
    fn recursion_rejected() {
        assert!(matches!(
            parse_source("f(x) := f(x-1); f(3)"),
            Err(SyntaxError::Program(ProgramError::Recursive(..)))
        ));
        assert!(matches!(
            parse_source("f(x) := g(x); g(x) := f(x); 1"),
            Err(SyntaxError::Program(ProgramError::Recursive(..)))
        ));
    }

    #[test]
    fn errors_carry_spans() {
        for src in ["1 +", "(1, 2", "f(x) := ", "|x", "a b", "3 = 4", ""] {
            match parse_source(src) {
                Err(SyntaxError::Parse(e)) => {
                    assert!(e.span.end <= src.len(), "{src}: {e:?}");
                }
                Err(SyntaxError::Lex(e)) => assert!(e.span.end <= src.len()),
                Ok(p) if src.is_empty() => assert!(p.statements.is_empty()),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn node_ids_unique() {
        let p = parse_source("tinysquare = [[-1,-1],[-1,1],[1,-1],[1,1]]/100; apply(tinysquare, d, f(P+d))")
            .unwrap();
        let mut ids = p.all_ids();
        let n = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), n);
    }
}
