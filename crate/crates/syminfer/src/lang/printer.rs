//! Canonical source rendering.

use std::fmt::Write;

use num_traits::Signed;

use super::ast::{AExpr, BExpr, Stmt};
use super::Program;

pub fn print(p: &Program) -> String {
    let mut out = String::new();
    let params = p
        .params
        .iter()
        .map(|v| format!("{}: int", v))
        .collect::<Vec<_>>()
        .join(", ");
    let _ = writeln!(out, "fn {}({}) {{", p.name, params);
    print_block(&mut out, &p.body, 1);
    out.push_str("}\n");
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_block(out: &mut String, stmts: &[Stmt], level: usize) {
    for s in stmts {
        indent(out, level);
        match s {
            Stmt::Assume(b) => {
                let _ = writeln!(out, "assume({});", bexpr(b));
            }
            Stmt::Decl(ds) => {
                let parts = ds
                    .iter()
                    .map(|(v, init)| match init {
                        Some(e) => format!("{} = {}", v, aexpr(e, 0)),
                        None => v.clone(),
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                let _ = writeln!(out, "int {};", parts);
            }
            Stmt::Assign(v, e) => {
                let _ = writeln!(out, "{} = {};", v, aexpr(e, 0));
            }
            Stmt::While(b, body) => {
                let _ = writeln!(out, "while ({}) {{", bexpr(b));
                print_block(out, body, level + 1);
                indent(out, level);
                out.push_str("}\n");
            }
            Stmt::If(b, then, els) => {
                let _ = writeln!(out, "if ({}) {{", bexpr(b));
                print_block(out, then, level + 1);
                indent(out, level);
                if els.is_empty() {
                    out.push_str("}\n");
                } else {
                    out.push_str("} else {\n");
                    print_block(out, els, level + 1);
                    indent(out, level);
                    out.push_str("}\n");
                }
            }
            Stmt::LocMark(l) => {
                let _ = writeln!(out, "@{};", l);
            }
        }
    }
}

pub fn bexpr(b: &BExpr) -> String {
    bexpr_prec(b, 0)
}

// precedence levels: 0 = ||, 1 = &&, 2 = ! / atoms
fn bexpr_prec(b: &BExpr, prec: u8) -> String {
    let (s, p) = match b {
        BExpr::Lit(v) => (v.to_string(), 2),
        BExpr::Cmp(op, l, r) => (format!("{} {} {}", aexpr(l, 0), op.symbol(), aexpr(r, 0)), 2),
        BExpr::Not(inner) => (format!("!({})", bexpr_prec(inner, 0)), 2),
        BExpr::And(l, r) => (
            format!("{} && {}", bexpr_prec(l, 1), bexpr_prec(r, 2)),
            1,
        ),
        BExpr::Or(l, r) => (format!("{} || {}", bexpr_prec(l, 0), bexpr_prec(r, 1)), 0),
    };
    if p < prec {
        format!("({})", s)
    } else {
        s
    }
}

// precedence levels: 0 = + -, 1 = *, 2 = unary/atoms
pub fn aexpr(e: &AExpr, prec: u8) -> String {
    let (s, p) = match e {
        AExpr::Var(v) => (v.clone(), 2),
        AExpr::Const(n) => {
            if n.is_negative() {
                (format!("(-{})", n.abs()), 2)
            } else {
                (n.to_string(), 2)
            }
        }
        AExpr::Neg(inner) => (format!("-{}", aexpr(inner, 2)), 2),
        AExpr::Add(l, r) => (format!("{} + {}", aexpr(l, 0), aexpr(r, 1)), 0),
        AExpr::Sub(l, r) => (format!("{} - {}", aexpr(l, 0), aexpr(r, 1)), 0),
        AExpr::Mul(l, r) => (format!("{} * {}", aexpr(l, 1), aexpr(r, 2)), 1),
    };
    if p < prec {
        format!("({})", s)
    } else {
        s
    }
}
