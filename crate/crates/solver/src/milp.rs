//! Depth-first branch-and-bound over binary variables.

use crate::error::SolverError;
use crate::program::{MathProgram, Objective, Sense, VarKind};
use crate::result::{SolveMeta, SolveResult, SolveStatus};
use crate::simplex::{relaxation_violation, solve_relaxation};
use crate::tol;

#[derive(Clone, Copy, Debug)]
pub struct MilpOptions {
    pub node_limit: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self { node_limit: 200_000 }
    }
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Parent relaxation value in minimization form.
    bound: f64,
}

pub fn solve_milp(p: &MathProgram) -> Result<SolveResult, SolverError> {
    solve_milp_with(p, MilpOptions::default())
}

pub fn solve_milp_with(p: &MathProgram, opts: MilpOptions) -> Result<SolveResult, SolverError> {
    p.validate()?;
    let Objective::Linear(obj) = &p.objective else {
        return Err(SolverError::WrongObjective("solve_milp needs a linear objective"));
    };
    let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let binaries: Vec<usize> =
        (0..p.vars.len()).filter(|&i| p.vars[i].kind == VarKind::Binary).collect();
    let integral = obj.constant.fract() == 0.0
        && obj
            .terms
            .iter()
            .all(|&(v, c)| p.vars[v.0].kind == VarKind::Binary && c.fract() == 0.0);

    // Prune when the relaxation cannot beat the incumbent.
    let dominated = |bound: f64, inc: f64| {
        if integral {
            (bound - 1e-6).ceil() >= inc - 0.5
        } else {
            bound >= inc - tol::OPTIMALITY
        }
    };

    let root_lower: Vec<f64> = p.vars.iter().map(|v| v.lower.max(if v.kind == VarKind::Binary { 0.0 } else { f64::NEG_INFINITY })).collect();
    let root_upper: Vec<f64> = p.vars.iter().map(|v| v.upper.min(if v.kind == VarKind::Binary { 1.0 } else { f64::INFINITY })).collect();

    let mut meta = SolveMeta::default();
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut stack = vec![Node { lower: root_lower, upper: root_upper, bound: f64::NEG_INFINITY }];

    while let Some(node) = stack.pop() {
        if meta.nodes >= opts.node_limit {
            stack.push(node);
            break;
        }
        if let Some((inc, _)) = &incumbent {
            if dominated(node.bound, *inc) {
                continue;
            }
        }
        let r = solve_relaxation(p, obj, &node.lower, &node.upper)?;
        meta.nodes += 1;
        meta.iterations += r.meta.iterations;
        let root = meta.nodes == 1;
        match r.status {
            SolveStatus::Infeasible => {
                if root {
                    return Ok(SolveResult::without_point(SolveStatus::Infeasible, meta));
                }
                continue;
            }
            SolveStatus::Unbounded => {
                let mut out = SolveResult::without_point(SolveStatus::Unbounded, meta);
                out.objective = r.objective;
                return Ok(out);
            }
            SolveStatus::IterationLimit => {
                return Err(SolverError::Numerical("LP iteration limit inside branch-and-bound".into()));
            }
            _ => {}
        }
        let bound = sign * r.objective;
        if let Some((inc, _)) = &incumbent {
            if dominated(bound, *inc) {
                continue;
            }
        }
        if root {
            if let Some(found) = rounding_heuristic(p, obj, &node.lower, &node.upper, &r.values, &binaries)? {
                incumbent = Some((sign * found.objective, found.values));
            }
        }
        let branch = binaries
            .iter()
            .copied()
            .map(|i| (i, (r.values[i] - r.values[i].round()).abs()))
            .filter(|&(_, f)| f > tol::INTEGRALITY)
            .fold(None, |best: Option<(usize, f64)>, (i, f)| match best {
                Some((_, bf)) if bf >= f => best,
                _ => Some((i, f)),
            });
        match branch {
            None => {
                let mut x = r.values;
                for &i in &binaries {
                    x[i] = x[i].round();
                }
                let value = sign * obj.eval(&x);
                if incumbent.as_ref().is_none_or(|(inc, _)| value < *inc - 1e-12) {
                    incumbent = Some((value, x));
                }
            }
            Some((i, _)) => {
                let mut down = Node { lower: node.lower.clone(), upper: node.upper.clone(), bound };
                down.upper[i] = 0.0;
                let mut up = Node { lower: node.lower, upper: node.upper, bound };
                up.lower[i] = 1.0;
                // Up-branch first: covering-style models find incumbents fastest there.
                stack.push(down);
                stack.push(up);
            }
        }
    }

    let open_bound = stack.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let exhausted = stack.is_empty();
    match incumbent {
        Some((value, x)) => {
            let worst = relaxation_violation(p, &x, &lower_of(p), &upper_of(p));
            if worst.0 > tol::FEASIBILITY {
                return Err(SolverError::Numerical(format!(
                    "incumbent violates {} by {:.3e}",
                    worst.1, worst.0
                )));
            }
            let best_bound = if exhausted { value } else { open_bound.min(value) };
            meta.bound = Some(sign * best_bound);
            let status = if exhausted { SolveStatus::Optimal } else { SolveStatus::IterationLimit };
            Ok(SolveResult { status, objective: obj.eval(&x), values: x, meta })
        }
        None if exhausted => Ok(SolveResult::without_point(SolveStatus::Infeasible, meta)),
        None => Ok(SolveResult::without_point(SolveStatus::IterationLimit, meta)),
    }
}

fn lower_of(p: &MathProgram) -> Vec<f64> {
    p.vars.iter().map(|v| v.lower).collect()
}

fn upper_of(p: &MathProgram) -> Vec<f64> {
    p.vars.iter().map(|v| v.upper).collect()
}

/// Rounds every positive binary up, fixes the binaries and re-solves the LP.
fn rounding_heuristic(
    p: &MathProgram,
    obj: &crate::program::LinExpr,
    lower: &[f64],
    upper: &[f64],
    x: &[f64],
    binaries: &[usize],
) -> Result<Option<SolveResult>, SolverError> {
    if binaries.is_empty() {
        return Ok(None);
    }
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    for &i in binaries {
        let v: f64 = if x[i] > tol::INTEGRALITY { 1.0 } else { 0.0 };
        let v = v.clamp(lower[i], upper[i]);
        lo[i] = v;
        hi[i] = v;
    }
    let r = solve_relaxation(p, obj, &lo, &hi)?;
    Ok((r.status == SolveStatus::Optimal).then_some(r))
}
