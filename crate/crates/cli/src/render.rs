//! Plain-text renderings. Numbers use four decimals throughout.

use std::fmt::Write;

use empnet_core::session::{CheckOutcome, CompletionOutcome, SessionSummary};
use empnet_core::{CompletionStatus, IntrinsicStatement, Phase, Session, SelectionResult};

fn phase(p: Phase) -> &'static str {
    match p {
        Phase::IntrinsicElicitation => "intrinsic-elicitation",
        Phase::EmpathicElicitation => "empathic-elicitation",
        Phase::Resolved => "resolved",
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |v| format!("{v:.4}"))
}

pub fn matrix(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:.4}")).collect();
        let _ = writeln!(out, "  {}", cells.join(" "));
    }
    out
}

pub fn summary(s: &SessionSummary) -> String {
    format!("session {}: {} experts, {} alternatives, phase {}, {} events\n", s.id, s.n, s.m, phase(s.phase), s.events)
}

pub fn status(s: &Session) -> String {
    let st = &s.state;
    let mut out = summary(&s.summary());
    let t = &st.thresholds;
    let _ = writeln!(
        out,
        "thresholds: eps_prime {} delta {} rho0 {} eps_min {} big_m {}",
        t.eps_prime,
        t.delta,
        t.rho0,
        t.eps_min,
        t.big_m(st.panel.n)
    );
    let _ = writeln!(out, "intrinsic statements: {}", st.intrinsic_statements.len());
    let _ = writeln!(out, "empathic statements: {}", st.statements.len());
    if let Some(f) = st.feasibility {
        let _ = writeln!(out, "eps*: {}", f.render());
    }
    if !st.selections.is_empty() {
        let names: Vec<&str> = st.selections.keys().map(String::as_str).collect();
        let _ = writeln!(out, "selected: {}", names.join(" "));
    }
    out
}

pub fn completion(o: &CompletionOutcome, statements: &[IntrinsicStatement]) -> String {
    let mut out = String::new();
    for c in &o.completions {
        match c.result.status {
            CompletionStatus::Completed => {
                let _ = writeln!(out, "d{}: completed, eps* {}", c.dm + 1, num(c.result.eps_star));
            }
            CompletionStatus::Inconsistent => {
                let _ = write!(out, "d{}: inconsistent", c.dm + 1);
                match &c.repair {
                    Some(empnet_core::judgment::JudgmentRepair::Sets { sets, .. }) => {
                        out.push_str("; drop one of");
                        for set in sets {
                            let ids: Vec<String> = set.iter().map(|p| (p + 1).to_string()).collect();
                            let _ = write!(out, " {{{}}}", ids.join(","));
                        }
                        out.push('\n');
                    }
                    Some(empnet_core::judgment::JudgmentRepair::Structural { reason }) => {
                        let _ = writeln!(out, "; {reason}");
                    }
                    None => out.push('\n'),
                }
            }
        }
    }
    if let Some(u) = &o.intrinsic {
        out.push_str("intrinsic utilities:\n");
        out.push_str(&matrix(u.rows()));
    } else {
        let _ = writeln!(out, "intrinsic utilities unavailable; {} intrinsic statement(s) on record", statements.len());
    }
    out
}

pub fn check(o: &CheckOutcome) -> String {
    let mut out = format!("eps*: {}\n", o.eps_star.render());
    if o.consistent {
        out.push_str("consistent\n");
        return out;
    }
    match &o.report {
        Some(r) => {
            let _ = writeln!(
                out,
                "inconsistent: {} minimum repair set(s) of size {}{}",
                r.sets.len(),
                r.cardinality,
                if r.exhausted { "" } else { " (limit reached)" }
            );
            for (k, set) in r.sets.iter().enumerate() {
                let _ = writeln!(out, "  set {}: {}", k + 1, set.join(" "));
            }
        }
        None => out.push_str("inconsistent\n"),
    }
    out
}

pub fn selection(r: &SelectionResult, eps_prime: f64, exports: &[String]) -> String {
    let mut out = String::new();
    let w = &r.network;
    let support = (0..w.n()).flat_map(|i| (0..w.n()).map(move |j| (i, j))).filter(|&(i, j)| i != j && w.get(i, j) >= eps_prime).count();
    let d = &r.diagnostics;
    let _ = writeln!(out, "target: {}", r.target.name());
    let _ = writeln!(out, "objective: {}", num(r.objective));
    let _ = writeln!(out, "eps: {:.4}", r.eps);
    let _ = writeln!(out, "support: {support}");
    let _ = writeln!(out, "density: {:.4}", d.density);
    let _ = writeln!(out, "entropy: {:.4}", d.entropy);
    let flags = [
        ("central", d.is_central),
        ("distributed", d.is_distributed),
        ("highly-resilient", d.is_highly_resilient),
        ("irreducible", d.is_irreducible),
    ];
    let set: Vec<&str> = flags.iter().filter(|f| f.1).map(|f| f.0).collect();
    let _ = writeln!(out, "properties: {}", if set.is_empty() { "none".to_string() } else { set.join(" ") });
    let omega: Vec<String> = d.centralities.iter().map(|v| format!("{v:.4}")).collect();
    let _ = writeln!(out, "centralities: {}", omega.join(" "));
    if let Some(c) = r.certificate.center {
        let _ = writeln!(out, "center: d{}", c + 1);
    }
    for note in &r.certificate.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out.push_str("W:\n");
    out.push_str(&matrix(w.rows()));
    if let Some(g) = &r.global {
        out.push_str("G:\n");
        out.push_str(&matrix(g.rows()));
    }
    let _ = writeln!(out, "exports: {}", exports.join(" "));
    out
}
