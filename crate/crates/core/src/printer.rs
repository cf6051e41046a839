//! Canonical source printer. Output re-parses to a tree of the same shape and
//! uses the fewest parentheses the grammar allows.

use crate::ast::{Node, NodeKind, Number, Program};

const SEQ: u8 = 0;
const ASSIGN: u8 = 1;
const LOGIC: u8 = 2;
const COMPARE: u8 = 3;
const ADD: u8 = 4;
const MUL: u8 = 5;
const PREFIX: u8 = 6;
const POW: u8 = 7;
const POSTFIX: u8 = 8;
const ATOM: u8 = 9;

pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for (k, s) in program.statements.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        write(s, ASSIGN, &mut out);
        out.push(';');
    }
    out
}

pub fn print_node(node: &Node) -> String {
    let mut out = String::new();
    write(node, SEQ, &mut out);
    out
}

fn binary_level(name: &str) -> Option<u8> {
    Some(match name {
        "&" | "%" => LOGIC,
        "==" | "!=" | "<" | "<=" | ">" | ">=" => COMPARE,
        "+" | "-" => ADD,
        "*" | "/" => MUL,
        "^" => POW,
        _ => return None,
    })
}

fn level(node: &Node) -> u8 {
    match &node.kind {
        NodeKind::Seq(_) => SEQ,
        NodeKind::Assign { .. } | NodeKind::FunDef { .. } => ASSIGN,
        NodeKind::Number(Number::Int(v)) if *v < 0 => PREFIX,
        NodeKind::Number(Number::Real(v)) if v.is_sign_negative() => PREFIX,
        NodeKind::Call { name, args } => match (name.as_str(), args.len()) {
            ("neg" | "not", 1) => PREFIX,
            (op, 2) => binary_level(op).unwrap_or(ATOM),
            _ => ATOM,
        },
        NodeKind::Index { .. } => POSTFIX,
        _ => ATOM,
    }
}

fn write(node: &Node, min: u8, out: &mut String) {
    if level(node) < min {
        out.push('(');
        write(node, SEQ, out);
        out.push(')');
        return;
    }
    match &node.kind {
        NodeKind::Number(n) => write_number(*n, out),
        NodeKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        NodeKind::Str(s) => {
            out.push('"');
            out.push_str(s);
            out.push('"');
        }
        NodeKind::Var(name) => out.push_str(name),
        NodeKind::List(items) => {
            out.push('[');
            write_list(items, ASSIGN, out);
            out.push(']');
        }
        NodeKind::Seq(items) => {
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str("; ");
                }
                write(item, ASSIGN, out);
            }
        }
        NodeKind::Assign { target, value } => {
            out.push_str(target);
            out.push_str(" = ");
            write(value, ASSIGN, out);
        }
        NodeKind::FunDef { name, params, body } => {
            out.push_str(name);
            out.push('(');
            out.push_str(&params.join(", "));
            out.push_str(") := ");
            write(body, ASSIGN, out);
        }
        NodeKind::Call { name, args } => write_call(name, args, out),
        NodeKind::If {
            cond,
            then,
            otherwise,
        } => {
            out.push_str("if(");
            write(cond, SEQ, out);
            out.push_str(", ");
            write(then, SEQ, out);
            if let Some(o) = otherwise {
                out.push_str(", ");
                write(o, SEQ, out);
            }
            out.push(')');
        }
        NodeKind::Repeat { count, body } => {
            out.push_str("repeat(");
            write(count, SEQ, out);
            out.push_str(", ");
            write(body, SEQ, out);
            out.push(')');
        }
        NodeKind::Apply { list, var, body } => {
            out.push_str("apply(");
            write(list, SEQ, out);
            out.push_str(", ");
            out.push_str(var);
            out.push_str(", ");
            write(body, SEQ, out);
            out.push(')');
        }
        NodeKind::Index { base, index } => {
            write(base, POSTFIX, out);
            out.push('_');
            match &index.kind {
                NodeKind::Number(Number::Int(v)) if *v >= 0 => out.push_str(&v.to_string()),
                NodeKind::Var(name) => out.push_str(name),
                _ => {
                    out.push('(');
                    write(index, SEQ, out);
                    out.push(')');
                }
            }
        }
    }
}

fn write_list(items: &[Node], min: u8, out: &mut String) {
    for (k, item) in items.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        write(item, min, out);
    }
}

fn write_call(name: &str, args: &[Node], out: &mut String) {
    match (name, args) {
        ("abs", [x]) => {
            out.push('|');
            write(x, ASSIGN, out);
            out.push('|');
        }
        ("neg", [x]) => {
            out.push('-');
            write(x, PREFIX, out);
        }
        ("not", [x]) => {
            out.push('!');
            write(x, PREFIX, out);
        }
        (op, [a, b]) if binary_level(op).is_some() => {
            let p = binary_level(op).unwrap();
            let (lmin, rmin) = if p == POW { (p + 1, p) } else { (p, p + 1) };
            write(a, lmin, out);
            out.push_str(op);
            write(b, rmin, out);
        }
        _ => {
            out.push_str(name);
            out.push('(');
            write_list(args, SEQ, out);
            out.push(')');
        }
    }
}

fn write_number(n: Number, out: &mut String) {
    match n {
        Number::Int(v) => out.push_str(&v.to_string()),
        Number::Real(v) => out.push_str(&format!("{v:?}")),
    }
}

#[cfg(test)]
mod tests {
    use crate::parser::parse_source;

    fn round_trip(src: &str) -> String {
        let p = parse_source(src).unwrap();
        let printed = p.as_body().to_source();
        let again = parse_source(&printed).unwrap();
        assert!(
            again.as_body().same_shape(&p.as_body()),
            "{src} printed as {printed}"
        );
        printed
    }

    #[test]
    fn wave_prints_compactly() {
        assert_eq!(round_trip("1/2 + 1/2 * sin(|#| - seconds())"), "1/2+1/2*sin(|#|-seconds())");
    }

    #[test]
    fn precedence_parentheses() {
        assert_eq!(round_trip("(a+b)*c"), "(a+b)*c");
        assert_eq!(round_trip("a-(b-c)"), "a-(b-c)");
        assert_eq!(round_trip("(a^b)^c"), "(a^b)^c");
        assert_eq!(round_trip("a^b^c"), "a^b^c");
        assert_eq!(round_trip("(-2)^2"), "(-2)^2");
        assert_eq!(round_trip("-2^2"), "-2^2");
        assert_eq!(round_trip("-(2)"), "-2");
        assert_eq!(round_trip("P.x"), "P_1");
        assert_eq!(round_trip("(a+b)_2"), "(a+b)_2");
    }

    #[test]
    fn real_literals_round_trip_exactly() {
        for s in ["0.1", "1e-7", "1e20", "0.30000000000000004", ".5"] {
            round_trip(s);
        }
    }

    #[test]
    fn statements_and_definitions() {
        let p = parse_source("f(P) := (x = P.x; x^2); a = f([1, 2]);").unwrap();
        let printed = p.to_source();
        assert_eq!(printed, "f(P) := (x = P_1; x^2);\na = f([1, 2]);");
        assert!(parse_source(&printed).unwrap().same_shape(&p));
    }
}
