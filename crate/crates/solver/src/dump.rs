//! Plain-text LP-style rendering for debugging and external cross-checks.

use std::fmt::Write;

use crate::program::{Cmp, LinExpr, MathProgram, Objective, Sense, VarKind};

fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn fmt_expr(p: &MathProgram, e: &LinExpr) -> String {
    let mut out = String::new();
    for &(v, c) in &e.terms {
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", fmt_num(c.abs()), p.vars[v.0].name);
    }
    if e.constant != 0.0 || e.terms.is_empty() {
        let sign = if e.constant < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {}", fmt_num(e.constant.abs()));
    }
    out
}

/// Renders `p` in an LP-file dialect. Entropy objectives appear as comments
/// followed by an empty linear objective, so the constraint block stays loadable.
pub fn dump_lp(p: &MathProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", if p.sense == Sense::Maximize { "Maximize" } else { "Minimize" });
    match &p.objective {
        Objective::Linear(e) => {
            let _ = writeln!(out, " obj:{}", fmt_expr(p, e));
        }
        Objective::Entropy(e) => {
            let _ = writeln!(out, "\\ entropy objective, scale {}", fmt_num(e.scale));
            for (j, a) in e.args.iter().enumerate() {
                let _ = writeln!(out, "\\  arg_{j}:{}", fmt_expr(p, a));
            }
            let _ = writeln!(out, " obj: 0");
        }
    }
    let _ = writeln!(out, "Subject To");
    for c in &p.constraints {
        let op = match c.cmp {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        };
        let mut lhs = c.expr.clone();
        let rhs = c.rhs - lhs.constant;
        lhs.constant = 0.0;
        let _ = writeln!(out, " {}:{} {op} {}", c.name, fmt_expr(p, &lhs), fmt_num(rhs));
    }
    let _ = writeln!(out, "Bounds");
    for v in &p.vars {
        if v.kind == VarKind::Binary {
            continue;
        }
        let lo = if v.lower.is_finite() { fmt_num(v.lower) } else { "-inf".into() };
        let hi = if v.upper.is_finite() { fmt_num(v.upper) } else { "+inf".into() };
        let _ = writeln!(out, " {lo} <= {} <= {hi}", v.name);
    }
    let bins: Vec<&str> = p.vars.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !bins.is_empty() {
        let _ = writeln!(out, "Binaries");
        let _ = writeln!(out, " {}", bins.join(" "));
    }
    out.push_str("End\n");
    out
}
