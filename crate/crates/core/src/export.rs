//! Graphviz DOT rendering of empathic networks.

use std::fmt::Write;

use crate::network::{EmpathicMatrix, MatrixKind};

/// Nodes `d1..dn`; an arc `i → j` for each off-diagonal `w_ij >= ε'`,
/// labelled with the weight to four decimals.
pub fn to_dot(w: &EmpathicMatrix, eps_prime: f64, name: &str) -> String {
    let mut out = String::new();
    let graph = if name.is_empty() { "empathic" } else { name };
    let _ = writeln!(out, "digraph \"{}\" {{", graph.replace('"', "'"));
    let kind = match w.kind() {
        MatrixKind::Local => "local",
        MatrixKind::Global => "global",
    };
    let _ = writeln!(out, "  graph [comment=\"{kind}\"];");
    for i in 1..=w.n() {
        let _ = writeln!(out, "  d{i};");
    }
    for (i, row) in w.rows().iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if i != j && v >= eps_prime {
                let _ = writeln!(out, "  d{} -> d{} [label=\"{v:.4}\"];", i + 1, j + 1);
            }
        }
    }
    out.push_str("}\n");
    out
}

/// Header `row,c1,…`, then each row at canonical (12-digit) precision.
pub fn matrix_csv(rows: &[Vec<f64>]) -> String {
    let cols = rows.first().map_or(0, Vec::len);
    let mut out = String::from("row");
    for c in 1..=cols {
        let _ = write!(out, ",c{c}");
    }
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        let _ = write!(out, "{}", i + 1);
        for v in r {
            let _ = write!(out, ",{}", crate::session::canonical::quantize(*v));
        }
        out.push('\n');
    }
    out
}
