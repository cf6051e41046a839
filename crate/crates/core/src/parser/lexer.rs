use std::fmt;

use crate::ast::Span;

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    True,
    False,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    /// `=`
    Assign,
    /// `:=`
    Define,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// `&`
    And,
    /// `%`
    Or,
    /// `!`
    Not,
    /// `|`, opening or closing a norm.
    Bar,
    Semi,
    Comma,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Dot,
    Underscore,
}

impl TokenKind {
    /// Coarse class: identifier, number, string, keyword, operator or punctuation.
    pub fn class(&self) -> &'static str {
        use TokenKind::*;
        match self {
            Ident(_) => "identifier",
            Int(_) | Real(_) => "number",
            Str(_) => "string",
            True | False => "keyword",
            Semi | Comma | LParen | RParen | LBracket | RBracket => "punctuation",
            _ => "operator",
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TokenKind::*;
        let s = match self {
            Ident(n) => return write!(f, "identifier `{n}`"),
            Int(i) => return write!(f, "number `{i}`"),
            Real(r) => return write!(f, "number `{r}`"),
            Str(s) => return write!(f, "string \"{s}\""),
            True => "`true`",
            False => "`false`",
            Plus => "`+`",
            Minus => "`-`",
            Star => "`*`",
            Slash => "`/`",
            Caret => "`^`",
            Assign => "`=`",
            Define => "`:=`",
            Eq => "`==`",
            Ne => "`!=`",
            Lt => "`<`",
            Le => "`<=`",
            Gt => "`>`",
            Ge => "`>=`",
            And => "`&`",
            Or => "`%`",
            Not => "`!`",
            Bar => "`|`",
            Semi => "`;`",
            Comma => "`,`",
            LParen => "`(`",
            RParen => "`)`",
            LBracket => "`[`",
            RBracket => "`]`",
            Dot => "`.`",
            Underscore => "`_`",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{message} at {}..{}", span.start, span.end)]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

/// Splits `source` into tokens. Whitespace and `//` line comments are skipped.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let bytes = source.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = source[pos..].chars().next().unwrap();
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        if source[pos..].starts_with("//") {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        let two = source.get(pos..pos + 2).unwrap_or("");
        let (kind, len) = match two {
            ":=" => (TokenKind::Define, 2),
            "==" => (TokenKind::Eq, 2),
            "!=" | "<>" => (TokenKind::Ne, 2),
            "<=" => (TokenKind::Le, 2),
            ">=" => (TokenKind::Ge, 2),
            _ => match c {
                '+' => (TokenKind::Plus, 1),
                '-' => (TokenKind::Minus, 1),
                '*' => (TokenKind::Star, 1),
                '/' => (TokenKind::Slash, 1),
                '^' => (TokenKind::Caret, 1),
                '=' => (TokenKind::Assign, 1),
                '<' => (TokenKind::Lt, 1),
                '>' => (TokenKind::Gt, 1),
                '&' => (TokenKind::And, 1),
                '%' => (TokenKind::Or, 1),
                '!' => (TokenKind::Not, 1),
                '|' => (TokenKind::Bar, 1),
                ';' => (TokenKind::Semi, 1),
                ',' => (TokenKind::Comma, 1),
                '(' => (TokenKind::LParen, 1),
                ')' => (TokenKind::RParen, 1),
                '[' => (TokenKind::LBracket, 1),
                ']' => (TokenKind::RBracket, 1),
                '_' => (TokenKind::Underscore, 1),
                '#' => (TokenKind::Ident("#".into()), 1),
                '"' => {
                    let rest = &source[pos + 1..];
                    let Some(end) = rest.find('"') else {
                        return Err(LexError {
                            message: "unterminated string literal".into(),
                            span: Span::new(start, source.len()),
                        });
                    };
                    (TokenKind::Str(rest[..end].to_string()), end + 2)
                }
                '.' if !next_is_digit(bytes, pos + 1) => (TokenKind::Dot, 1),
                c if c.is_ascii_digit() || c == '.' => lex_number(source, pos)?,
                c if c.is_ascii_alphabetic() => {
                    let len = source[pos..]
                        .find(|ch: char| !ch.is_ascii_alphanumeric())
                        .unwrap_or(source.len() - pos);
                    let word = &source[pos..pos + len];
                    let kind = match word {
                        "true" => TokenKind::True,
                        "false" => TokenKind::False,
                        _ => TokenKind::Ident(word.to_string()),
                    };
                    (kind, len)
                }
                other => {
                    return Err(LexError {
                        message: format!("illegal character `{other}`"),
                        span: Span::new(start, start + other.len_utf8()),
                    })
                }
            },
        };
        pos += len;
        out.push(Token {
            kind,
            lexeme: source[start..pos].to_string(),
            span: Span::new(start, pos),
        });
    }
    Ok(out)
}

fn next_is_digit(bytes: &[u8], at: usize) -> bool {
    bytes.get(at).is_some_and(|b| b.is_ascii_digit())
}

fn lex_number(source: &str, start: usize) -> Result<(TokenKind, usize), LexError> {
    let bytes = source.as_bytes();
    let mut pos = start;
    let mut is_real = false;
    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
        pos += 1;
    }
    if pos < bytes.len() && bytes[pos] == b'.' && next_is_digit(bytes, pos + 1) {
        is_real = true;
        pos += 1;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
    }
    if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
        let mut p = pos + 1;
        if p < bytes.len() && (bytes[p] == b'+' || bytes[p] == b'-') {
            p += 1;
        }
        if next_is_digit(bytes, p) {
            is_real = true;
            pos = p;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
        }
    }
    let text = &source[start..pos];
    let span = Span::new(start, pos);
    let kind = if is_real {
        TokenKind::Real(text.parse().map_err(|_| LexError {
            message: format!("malformed number `{text}`"),
            span,
        })?)
    } else {
        let v: i64 = text.parse().map_err(|_| LexError {
            message: format!("integer literal `{text}` out of range"),
            span,
        })?;
        if v > i32::MAX as i64 + 1 {
            return Err(LexError {
                message: format!("integer literal `{text}` out of range"),
                span,
            });
        }
        TokenKind::Int(v)
    };
    Ok((kind, pos - start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        tokenize(s).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn simple_division() {
        assert_eq!(kinds("1/2"), vec![Int(1), Slash, Int(2)]);
    }

    #[test]
    fn call() {
        assert_eq!(
            kinds("sqrt(a)"),
            vec![Ident("sqrt".into()), LParen, Ident("a".into()), RParen]
        );
    }

    #[test]
    fn definition_with_norm() {
        assert_eq!(
            kinds("f(P) := |P|"),
            vec![
                Ident("f".into()),
                LParen,
                Ident("P".into()),
                RParen,
                Define,
                Bar,
                Ident("P".into()),
                Bar
            ]
        );
    }

    #[test]
    fn numbers_and_fields() {
        assert_eq!(kinds(".3"), vec![Real(0.3)]);
        assert_eq!(kinds("1e-3"), vec![Real(1e-3)]);
        assert_eq!(kinds("P.x"), vec![Ident("P".into()), Dot, Ident("x".into())]);
        assert_eq!(kinds("l_2"), vec![Ident("l".into()), Underscore, Int(2)]);
        assert_eq!(kinds("\"julia\""), vec![Str("julia".into())]);
    }

    #[test]
    fn comments_skipped() {
        assert_eq!(kinds("1 // one\n+2"), vec![Int(1), Plus, Int(2)]);
    }

    #[test]
    fn illegal_character_has_span() {
        let err = tokenize("a + $").unwrap_err();
        assert_eq!(err.span, Span::new(4, 5));
    }

    #[test]
    fn spans_are_contiguous_and_ordered() {
        let src = "x^3 + a*x + b - y^2";
        let toks = tokenize(src).unwrap();
        for w in toks.windows(2) {
            assert!(w[0].span.end <= w[1].span.start);
        }
        for t in &toks {
            assert_eq!(&src[t.span.start..t.span.end], t.lexeme);
        }
    }
}
