//! Social welfare of alternatives and the best alternative per network.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::index::one_based;
use crate::network::{global_utilities, utilities_under, EmpathicMatrix, MatrixKind, UtilityMatrix};

pub const BASELINE_LABEL: &str = "Without network";

/// Column sums `sw(a_s) = Σ_j u_j(a_s)`.
pub fn social_welfare(u: &UtilityMatrix) -> Vec<f64> {
    (0..u.m()).map(|s| (0..u.n()).map(|j| u.get(j, s)).sum()).collect()
}

/// Index of the largest welfare, lowest index on ties.
pub fn best_alternative(u: &UtilityMatrix) -> usize {
    argmax(&social_welfare(u))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (s, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = s;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagation {
    /// `U = W U^I`.
    #[default]
    Local,
    /// `U = G U^I` with `G` derived from a local `W`.
    Global,
}

/// A labelled network for welfare comparison: either a matrix, with a
/// propagation mode, or precomputed empathic utilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkInput {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<EmpathicMatrix>,
    #[serde(default)]
    pub propagation: Propagation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilities: Option<UtilityMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelfareRow {
    pub label: String,
    pub sw: Vec<f64>,
    #[serde(with = "one_based")]
    pub best: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelfareReport {
    pub rows: Vec<WelfareRow>,
}

fn row(label: &str, u: &UtilityMatrix) -> WelfareRow {
    let sw = social_welfare(u);
    WelfareRow { label: label.to_string(), best: argmax(&sw), sw }
}

fn utilities_of(ui: &UtilityMatrix, net: &NetworkInput) -> Result<UtilityMatrix> {
    match (&net.matrix, &net.utilities) {
        (Some(w), None) => match (net.propagation, w.kind()) {
            (Propagation::Global, MatrixKind::Local) => global_utilities(w, ui),
            _ => utilities_under(w, ui),
        },
        (None, Some(u)) => {
            if u.n() != ui.n() || u.m() != ui.m() {
                return Err(CoreError::Dimension(format!(
                    "{:?}: utilities are {}x{}, expected {}x{}",
                    net.label,
                    u.n(),
                    u.m(),
                    ui.n(),
                    ui.m()
                )));
            }
            Ok(u.clone())
        }
        _ => Err(CoreError::invalid(format!("networks[{:?}]", net.label), "give exactly one of matrix or utilities")),
    }
}

/// Baseline row from `U^I`, then one row per network.
pub fn compare_networks(ui: &UtilityMatrix, networks: &[NetworkInput]) -> Result<WelfareReport> {
    let mut rows = vec![row(BASELINE_LABEL, ui)];
    for net in networks {
        rows.push(row(&net.label, &utilities_of(ui, net)?));
    }
    Ok(WelfareReport { rows })
}

/// Convenience form of [`compare_networks`] for local matrices.
pub fn compare_matrices(ui: &UtilityMatrix, networks: &[(String, EmpathicMatrix)]) -> Result<WelfareReport> {
    let inputs: Vec<NetworkInput> = networks
        .iter()
        .map(|(label, w)| NetworkInput { label: label.clone(), matrix: Some(w.clone()), propagation: Propagation::Local, utilities: None })
        .collect();
    compare_networks(ui, &inputs)
}

/// Convenience form of [`compare_networks`] for precomputed utilities.
pub fn compare_utilities(ui: &UtilityMatrix, utilities: &[(String, UtilityMatrix)]) -> Result<WelfareReport> {
    let inputs: Vec<NetworkInput> = utilities
        .iter()
        .map(|(label, u)| NetworkInput { label: label.clone(), matrix: None, propagation: Propagation::Local, utilities: Some(u.clone()) })
        .collect();
    compare_networks(ui, &inputs)
}

impl WelfareReport {
    /// `network,a1,…,am,best` with four decimals.
    pub fn to_csv(&self) -> String {
        let m = self.rows.first().map_or(0, |r| r.sw.len());
        let mut out = String::from("network");
        for s in 1..=m {
            let _ = write!(out, ",a{s}");
        }
        out.push_str(",best\n");
        for r in &self.rows {
            out.push_str(&csv_field(&r.label));
            for v in &r.sw {
                let _ = write!(out, ",{v:.4}");
            }
            let _ = writeln!(out, ",a{}", r.best + 1);
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
