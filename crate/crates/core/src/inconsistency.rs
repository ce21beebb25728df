//! Minimum-cardinality repair sets for contradictory statements, found by
//! a big-M relaxation with one binary per statement and enumerated with
//! exclusion cuts.

use empnet_solver::{solve_milp, Cmp, LinExpr, MathProgram, Objective, Sense, SolveStatus, Var};
use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintSystem, EpsMode, Formulation};
use crate::error::{CoreError, Result};
use crate::network::Thresholds;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyReport {
    /// Statement ids, each set of the same minimum cardinality.
    pub sets: Vec<Vec<String>>,
    pub cardinality: usize,
    /// Every minimum set was found (the limit did not cut enumeration short).
    pub exhausted: bool,
}

/// Repeatedly minimizes `Σν` over `p`, cutting off each optimum found.
/// Stops once the optimum grows or the program turns infeasible; after
/// `limit` sets one extra probe decides whether enumeration was complete.
pub(crate) fn enumerate_min_covers(mut p: MathProgram, nus: &[Var], limit: usize) -> Result<(Vec<Vec<usize>>, bool)> {
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut best: Option<f64> = None;
    loop {
        let r = solve_milp(&p).map_err(|source| CoreError::Solver { source, dump: empnet_solver::dump_lp(&p) })?;
        match r.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible if best.is_some() => return Ok((sets, true)),
            SolveStatus::Infeasible => {
                return Err(CoreError::Internal("relaxed program is infeasible with every statement relaxable".into()))
            }
            other => return Err(CoreError::Internal(format!("repair program ended with status {other:?}"))),
        }
        if let Some(b) = best {
            if r.objective > b + 0.5 {
                return Ok((sets, true));
            }
        }
        best.get_or_insert(r.objective);
        if sets.len() == limit {
            return Ok((sets, false));
        }
        let chosen: Vec<usize> = nus.iter().enumerate().filter(|(_, v)| r.values[v.0] > 0.5).map(|(k, _)| k).collect();
        let mut cut = LinExpr::new();
        for &k in &chosen {
            cut.add(nus[k], 1.0);
        }
        p.add_constraint(format!("cut_{}", sets.len() + 1), cut, Cmp::Le, chosen.len() as f64 - 1.0);
        sets.push(chosen);
    }
}

fn check_gate(sys: &ConstraintSystem) -> Result<()> {
    if sys.feasible()?.is_positive() {
        return Err(CoreError::Precondition("the statement system is consistent; there is nothing to repair".into()));
    }
    Ok(())
}

fn relaxed(sys: &ConstraintSystem, t: &Thresholds) -> (MathProgram, Vec<Var>) {
    let mut f = Formulation::new(sys);
    f.eps = EpsMode::Fixed(t.eps_min);
    f.relax = Some(t.big_m(sys.n));
    f.sense = Sense::Minimize;
    let built = f.build();
    let mut p = built.program;
    let mut obj = LinExpr::new();
    for &nu in &built.nus {
        obj.add(nu, 1.0);
    }
    p.set_objective(Objective::Linear(obj));
    (p, built.nus)
}

fn tags(sys: &ConstraintSystem, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&k| sys.groups[k].tag.clone()).collect()
}

/// One minimum-cardinality set of statements whose removal restores a
/// compatible network at slack `t.eps_min`.
pub fn min_inconsistent_set(sys: &ConstraintSystem, t: &Thresholds) -> Result<Vec<String>> {
    let report = enumerate_sets(sys, t, 1)?;
    Ok(report.sets.into_iter().next().unwrap_or_default())
}

pub fn enumerate_sets(sys: &ConstraintSystem, t: &Thresholds, limit: usize) -> Result<InconsistencyReport> {
    check_gate(sys)?;
    if limit == 0 {
        return Err(CoreError::invalid("limit", "must be at least 1"));
    }
    let (p, nus) = relaxed(sys, t);
    let (sets, exhausted) = enumerate_min_covers(p, &nus, limit)?;
    let cardinality = sets.first().map_or(0, Vec::len);
    Ok(InconsistencyReport { sets: sets.iter().map(|s| tags(sys, s)).collect(), cardinality, exhausted })
}

/// Outcome of dropping statements.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    pub system: ConstraintSystem,
    /// The reduced system admits ε* > 0.
    pub consistent: bool,
}

/// Removes the chosen statements and re-checks feasibility.
pub fn apply_resolution(sys: &ConstraintSystem, chosen: &[String]) -> Result<Resolution> {
    if chosen.is_empty() {
        return Err(CoreError::invalid("chosen", "no statements selected"));
    }
    if let Some(bad) = chosen.iter().find(|id| sys.group(id).is_none()) {
        return Err(CoreError::invalid("chosen", format!("unknown statement id {bad:?}")));
    }
    let system = sys.without(chosen);
    let consistent = system.feasible()?.is_positive();
    Ok(Resolution { system, consistent })
}
