use std::fmt::Write;

use super::ast::*;

/// Canonical source text for a list of constructs.
///
/// Constructs are separated by a blank line, except that consecutive fact
/// literals are written one per line.
pub fn pretty_print(constructs: &[Construct]) -> String {
    let mut out = String::new();
    let mut prev_fact = false;
    for (i, c) in constructs.iter().enumerate() {
        let is_fact = matches!(c, Construct::Fact(_));
        if i > 0 && !(is_fact && prev_fact) {
            out.push('\n');
        }
        write_construct(&mut out, c);
        out.push('\n');
        prev_fact = is_fact;
    }
    out
}

fn write_construct(out: &mut String, c: &Construct) {
    match c {
        Construct::Template(t) => {
            write!(out, "(deftemplate {}", t.name).unwrap();
            for s in &t.slots {
                write!(out, "\n  (slot {}", s.name).unwrap();
                if let Some(d) = &s.default {
                    write!(out, " (default {d})").unwrap();
                }
                out.push(')');
            }
            out.push(')');
        }
        Construct::Global(g) => {
            write!(out, "(defglobal ?*{}* = {})", g.name, g.value).unwrap();
        }
        Construct::Rule(r) => write_rule(out, r),
        Construct::Fact(f) => write_fact(out, f),
    }
}

fn write_rule(out: &mut String, r: &RuleDef) {
    write!(out, "(defrule {}", r.name).unwrap();
    if r.salience != 0 {
        write!(out, "\n  (declare (salience {}))", r.salience).unwrap();
    }
    for p in &r.lhs {
        out.push_str("\n  ");
        if let Some(a) = &p.address {
            write!(out, "?{a} <- ").unwrap();
        }
        write_pattern(out, p);
    }
    out.push_str("\n  =>");
    for a in &r.rhs {
        write_action(out, a, 1);
    }
    out.push(')');
}

fn write_constraint(out: &mut String, c: &Constraint) {
    match c {
        Constraint::Literal(v) => write!(out, "{v}").unwrap(),
        Constraint::Variable(v) => write!(out, "?{v}").unwrap(),
        Constraint::Wildcard => out.push('?'),
    }
}

fn write_pattern(out: &mut String, p: &PatternSpec) {
    write!(out, "({}", p.name).unwrap();
    match &p.constraints {
        PatternBody::Ordered(cs) => {
            for c in cs {
                out.push(' ');
                write_constraint(out, c);
            }
        }
        PatternBody::Templated(cs) => {
            for (slot, c) in cs {
                write!(out, " ({slot} ").unwrap();
                write_constraint(out, c);
                out.push(')');
            }
        }
    }
    out.push(')');
}

fn write_fact(out: &mut String, f: &FactLiteral) {
    write!(out, "({}", f.name).unwrap();
    match &f.body {
        FactBody::Ordered(vs) => {
            for v in vs {
                out.push(' ');
                write_expr(out, v);
            }
        }
        FactBody::Templated(vs) => {
            for (slot, v) in vs {
                write!(out, " ({slot} ").unwrap();
                write_expr(out, v);
                out.push(')');
            }
        }
    }
    out.push(')');
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Literal(v) => write!(out, "{v}").unwrap(),
        Expr::Variable(v) => write!(out, "?{v}").unwrap(),
        Expr::Global(g) => write!(out, "?*{g}*").unwrap(),
        Expr::Arith(op, args) => {
            write!(out, "({}", op.symbol()).unwrap();
            for a in args {
                out.push(' ');
                write_expr(out, a);
            }
            out.push(')');
        }
    }
}

fn write_cond(out: &mut String, c: &CondExpr) {
    match c {
        CondExpr::Compare(op, a, b) => {
            write!(out, "({} ", op.symbol()).unwrap();
            write_expr(out, a);
            out.push(' ');
            write_expr(out, b);
            out.push(')');
        }
        CondExpr::And(parts) => {
            out.push_str("(and");
            for p in parts {
                out.push(' ');
                write_cond(out, p);
            }
            out.push(')');
        }
    }
}

fn newline(out: &mut String, depth: usize) {
    out.push('\n');
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_action(out: &mut String, a: &ActionSpec, depth: usize) {
    newline(out, depth);
    match a {
        ActionSpec::Assert(f) => {
            out.push_str("(assert ");
            write_fact(out, f);
            out.push(')');
        }
        ActionSpec::Retract(v) => write!(out, "(retract ?{v})").unwrap(),
        ActionSpec::Bind(g, e) => {
            write!(out, "(bind ?*{g}* ").unwrap();
            write_expr(out, e);
            out.push(')');
        }
        ActionSpec::Print { items, newline } => {
            out.push_str("(printout t");
            for e in items {
                out.push(' ');
                write_expr(out, e);
            }
            if *newline {
                out.push_str(" crlf");
            }
            out.push(')');
        }
        ActionSpec::If {
            cond,
            then,
            otherwise,
        } => {
            out.push_str("(if ");
            write_cond(out, cond);
            out.push_str(" then");
            for t in then {
                write_action(out, t, depth + 1);
            }
            if let Some(es) = otherwise {
                newline(out, depth);
                out.push_str(" else");
                for e in es {
                    write_action(out, e, depth + 1);
                }
            }
            out.push(')');
        }
    }
}
