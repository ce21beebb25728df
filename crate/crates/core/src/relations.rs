//! Necessary and possible empathic relations over the compatible set.

use std::collections::HashMap;
use std::fmt::Write;
use std::sync::Mutex;

use empnet_solver::{LinExpr, Objective};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{eps_of, run_lp, ConstraintSystem, EpsMode, EpsStar, Formulation, EPS_TOL};
use crate::error::{CoreError, Result};
use crate::index::one_based;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelationClass {
    Necessary,
    PossibleOnly,
    Impossible,
    SelfAlways,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationCell {
    #[serde(with = "one_based")]
    pub i: usize,
    #[serde(with = "one_based")]
    pub j: usize,
    pub class: RelationClass,
    /// Max ε with `w_ij = 0`.
    pub eps_model2: EpsStar,
    /// Max ε with `w_ij >= ε'`.
    pub eps_model3: EpsStar,
    /// The zero-weight probe ended at ε* = 0 within tolerance.
    #[serde(default)]
    pub borderline: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationMatrix {
    pub n: usize,
    pub fingerprint: String,
    /// Off-diagonal cells in row-major order.
    pub cells: Vec<RelationCell>,
}

fn check_pair(sys: &ConstraintSystem, i: usize, j: usize) -> Result<()> {
    if i >= sys.n || j >= sys.n {
        return Err(CoreError::invalid("pair", format!("({}, {}) outside 1..={}", i + 1, j + 1, sys.n)));
    }
    if i == j {
        return Err(CoreError::invalid("pair", "relations are defined for i != j"));
    }
    Ok(())
}

fn probe(sys: &ConstraintSystem, i: usize, j: usize, zero: bool) -> Result<EpsStar> {
    let mut f = Formulation::new(sys);
    f.eps = EpsMode::Free;
    if zero {
        f.bound(i, j, 0.0, 0.0);
    } else {
        f.bound(i, j, sys.eps_prime, f64::INFINITY);
    }
    let built = f.build();
    let mut p = built.program;
    p.set_objective(Objective::Linear(LinExpr::var(built.eps)));
    eps_of(&run_lp(&p)?)
}

/// True when no compatible network with ε* > 0 lacks the arc `i → j`.
pub fn necessary(sys: &ConstraintSystem, i: usize, j: usize) -> Result<(bool, EpsStar)> {
    check_pair(sys, i, j)?;
    let e = probe(sys, i, j, true)?;
    let nec = match e {
        EpsStar::Infeasible => true,
        EpsStar::Optimal { value } => value < -EPS_TOL,
        EpsStar::Unbounded => false,
    };
    Ok((nec, e))
}

/// True when some compatible network with ε* > 0 has the arc `i → j`.
pub fn possible(sys: &ConstraintSystem, i: usize, j: usize) -> Result<(bool, EpsStar)> {
    check_pair(sys, i, j)?;
    let e = probe(sys, i, j, false)?;
    Ok((e.is_positive(), e))
}

fn cell(sys: &ConstraintSystem, i: usize, j: usize) -> Result<RelationCell> {
    let (nec, e2) = necessary(sys, i, j)?;
    let (pos, e3) = possible(sys, i, j)?;
    let class = if nec {
        RelationClass::Necessary
    } else if pos {
        RelationClass::PossibleOnly
    } else {
        RelationClass::Impossible
    };
    let borderline = matches!(e2, EpsStar::Optimal { value } if value.abs() <= EPS_TOL);
    Ok(RelationCell { i, j, class, eps_model2: e2, eps_model3: e3, borderline })
}

/// Classifies every ordered pair; probes run in parallel.
pub fn relation_matrix(sys: &ConstraintSystem) -> Result<RelationMatrix> {
    if !sys.feasible()?.is_positive() {
        return Err(CoreError::Precondition(
            "the statement system has no compatible network with positive slack; resolve inconsistencies first".into(),
        ));
    }
    let n = sys.n;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let cells = pairs.par_iter().map(|&(i, j)| cell(sys, i, j)).collect::<Result<Vec<_>>>()?;
    Ok(RelationMatrix { n, fingerprint: sys.fingerprint(), cells })
}

impl RelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> RelationClass {
        if i == j {
            return RelationClass::SelfAlways;
        }
        self.cell(i, j).map_or(RelationClass::Impossible, |c| c.class)
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<&RelationCell> {
        self.cells.iter().find(|c| c.i == i && c.j == j)
    }

    /// `i,j,class,eps_model2,eps_model3` with one-based indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,class,eps_model2,eps_model3\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{:?},{},{}",
                c.i + 1,
                c.j + 1,
                c.class,
                c.eps_model2.render(),
                c.eps_model3.render()
            );
        }
        out
    }

    /// `n×n` grid of class names for heatmap rendering.
    pub fn heatmap(&self) -> serde_json::Value {
        let grid: Vec<Vec<RelationClass>> = (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect();
        serde_json::json!({ "n": self.n, "classes": grid, "cells": self.cells })
    }
}

/// Memoizes relation matrices by system fingerprint.
#[derive(Default)]
pub struct RelationCache {
    entries: Mutex<HashMap<String, RelationMatrix>>,
}

impl RelationCache {
    pub fn get_or_compute(&self, sys: &ConstraintSystem) -> Result<RelationMatrix> {
        let key = sys.fingerprint();
        if let Some(hit) = self.entries.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let m = relation_matrix(sys)?;
        self.entries.lock().expect("cache lock").insert(key, m.clone());
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
