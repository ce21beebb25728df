//! Entropy objectives over polyhedra.
//!
//! Maximization is convex: implicit equalities are found with capped-slack LPs,
//! a strictly interior point is averaged from those LP solutions, and a
//! log-barrier Newton method runs in the null space of all equalities.
//!
//! Minimization is concave, so optima sit at vertices. Each start is an LP
//! vertex and descends by successive linearization: minimize the gradient
//! over the polytope, move if the entropy drops, stop otherwise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::SolverError;
use crate::program::{dphi, phi, Cmp, EntropyObjective, LinExpr, MathProgram, Objective, Sense, Var};
use crate::result::{SolveMeta, SolveResult, SolveStatus, StartOrigin, StartTrace};
use crate::simplex::solve_lp;
use crate::tol;

/// Default number of starts for [`minimize_entropy`].
pub const DEFAULT_STARTS: usize = 32;

const STRICT_SLACK: f64 = 1e-7;
const GAP_TARGET: f64 = 1e-9;
const SLA_CAP: usize = 200;

fn entropy_of(p: &MathProgram, sense: Sense) -> Result<&EntropyObjective, SolverError> {
    p.validate()?;
    if p.has_binaries() {
        return Err(SolverError::WrongObjective("entropy programs take continuous variables"));
    }
    match (&p.objective, p.sense == sense) {
        (Objective::Entropy(e), true) => Ok(e),
        (Objective::Entropy(_), false) => Err(SolverError::WrongObjective("entropy sense mismatch")),
        _ => Err(SolverError::WrongObjective("entropy solver needs an entropy objective")),
    }
}

fn with_linear(p: &MathProgram, obj: LinExpr, sense: Sense) -> MathProgram {
    MathProgram {
        vars: p.vars.clone(),
        constraints: p.constraints.clone(),
        objective: Objective::Linear(obj),
        sense,
    }
}

/// One inequality `g·x >= h`.
struct Row {
    g: Vec<f64>,
    h: f64,
}

/// Splits bounds and constraints into equality rows and `>=` rows.
fn rows_of(p: &MathProgram) -> (Vec<Row>, Vec<Row>) {
    let nv = p.vars.len();
    let mut eq = Vec::new();
    let mut ge = Vec::new();
    for (i, v) in p.vars.iter().enumerate() {
        let mut e = vec![0.0; nv];
        e[i] = 1.0;
        if v.lower.is_finite() && v.upper.is_finite() && v.upper - v.lower <= 1e-12 {
            eq.push(Row { g: e, h: v.lower });
            continue;
        }
        if v.lower.is_finite() {
            ge.push(Row { g: e.clone(), h: v.lower });
        }
        if v.upper.is_finite() {
            e[i] = -1.0;
            ge.push(Row { g: e, h: -v.upper });
        }
    }
    for c in &p.constraints {
        let a = c.expr.dense(nv);
        let b = c.rhs - c.expr.constant;
        match c.cmp {
            Cmp::Eq => eq.push(Row { g: a, h: b }),
            Cmp::Ge => ge.push(Row { g: a, h: b }),
            Cmp::Le => ge.push(Row { g: a.iter().map(|v| -v).collect(), h: -b }),
        }
    }
    (eq, ge)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Finds which `>=` rows admit strict slack and a point strictly inside them.
/// Returns `None` when the region is empty.
fn relative_interior(p: &MathProgram, ge: &[Row]) -> Result<Option<(Vec<f64>, Vec<bool>)>, SolverError> {
    let nv = p.vars.len();
    let mut strict = vec![false; ge.len()];
    let mut points: Vec<Vec<f64>> = Vec::new();
    loop {
        let open: Vec<usize> = (0..ge.len()).filter(|&k| !strict[k]).collect();
        let mut q = with_linear(p, LinExpr::new(), Sense::Maximize);
        let mut obj = LinExpr::new();
        for &k in &open {
            let s = q.add_var(format!("slack_{k}"), 0.0, 1.0);
            let mut e = LinExpr::new();
            for (i, &c) in ge[k].g.iter().enumerate() {
                e.add(Var(i), c);
            }
            e.add(s, -1.0);
            q.add_constraint(format!("strict_{k}"), e, Cmp::Ge, ge[k].h);
            obj.add(s, 1.0);
        }
        q.objective = Objective::Linear(obj);
        let r = solve_lp(&q)?;
        match r.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible if points.is_empty() => return Ok(None),
            s => return Err(SolverError::Numerical(format!("interior search LP ended {s:?}"))),
        }
        let mut progress = false;
        for (idx, &k) in open.iter().enumerate() {
            if r.values[nv + idx] > STRICT_SLACK {
                strict[k] = true;
                progress = true;
            }
        }
        points.push(r.values[..nv].to_vec());
        if !progress || strict.iter().all(|&s| s) {
            break;
        }
    }
    let mut x0 = vec![0.0; nv];
    for pt in &points {
        for (a, b) in x0.iter_mut().zip(pt) {
            *a += b / points.len() as f64;
        }
    }
    Ok(Some((x0, strict)))
}

/// Orthonormal basis (as columns) of the null space of `rows`.
fn null_space(rows: &[&[f64]], nv: usize) -> DMatrix<f64> {
    if rows.is_empty() {
        return DMatrix::identity(nv, nv);
    }
    let a = DMatrix::from_fn(rows.len(), nv, |i, j| rows[i][j]);
    let ata = a.transpose() * &a;
    let eig = SymmetricEigen::new(ata);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = 1e-10 * top.max(1.0);
    let cols: Vec<usize> = (0..nv).filter(|&k| eig.eigenvalues[k].abs() <= cut).collect();
    DMatrix::from_fn(nv, cols.len(), |i, k| eig.eigenvectors[(i, cols[k])])
}

/// Maximizes an entropy objective with a log-barrier interior method.
pub fn maximize_entropy(p: &MathProgram) -> Result<SolveResult, SolverError> {
    let ent = entropy_of(p, Sense::Maximize)?;
    let nv = p.vars.len();
    let (eq, ge) = rows_of(p);
    let Some((x0, strict)) = relative_interior(p, &ge)? else {
        return Ok(SolveResult::without_point(SolveStatus::Infeasible, SolveMeta::default()));
    };

    let mut eq_rows: Vec<&[f64]> = eq.iter().map(|r| r.g.as_slice()).collect();
    eq_rows.extend(ge.iter().zip(&strict).filter(|(_, &s)| !s).map(|(r, _)| r.g.as_slice()));
    let z = null_space(&eq_rows, nv);
    let d = z.ncols();
    let mut meta = SolveMeta::default();
    if d == 0 {
        meta.gap = Some(0.0);
        return Ok(SolveResult { status: SolveStatus::Optimal, objective: ent.value(&x0), values: x0, meta });
    }

    let project = |g: &[f64]| -> DVector<f64> { z.transpose() * DVector::from_column_slice(g) };
    let barrier: Vec<(DVector<f64>, f64)> = ge
        .iter()
        .zip(&strict)
        .filter(|(_, &s)| s)
        .map(|(r, _)| (project(&r.g), dot(&r.g, &x0) - r.h))
        .collect();
    let args: Vec<(DVector<f64>, f64)> = ent
        .args
        .iter()
        .map(|a| {
            let dense = a.dense(nv);
            (project(&dense), a.eval(&x0))
        })
        .collect();
    let scale = ent.scale;
    let m = barrier.len().max(1) as f64;

    // Value of the barrier function, or None outside its domain.
    let value = |y: &DVector<f64>, t: f64| -> Option<f64> {
        let mut f = 0.0;
        for (g, s0) in &barrier {
            let s = s0 + g.dot(y);
            if s <= 0.0 {
                return None;
            }
            f -= s.ln();
        }
        for (a, l0) in &args {
            let l = l0 + a.dot(y);
            if l <= 0.0 {
                return None;
            }
            f -= t * phi(l, scale);
        }
        Some(f)
    };

    let mut y = DVector::zeros(d);
    let mut t = 1.0;
    let mut newton_steps = 0usize;
    loop {
        for _ in 0..100 {
            let mut grad = DVector::zeros(d);
            let mut hess = DMatrix::zeros(d, d);
            for (g, s0) in &barrier {
                let s = s0 + g.dot(&y);
                grad -= g / s;
                hess.ger(1.0 / (s * s), g, g, 1.0);
            }
            for (a, l0) in &args {
                let l = l0 + a.dot(&y);
                grad -= a * (t * dphi(l, scale));
                hess.ger(t / (scale * l.max(tol::LOG_FLOOR)), a, a, 1.0);
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    let ridge = 1e-12 * hess.trace().abs().max(1.0);
                    let mut h = hess;
                    for i in 0..d {
                        h[(i, i)] += ridge;
                    }
                    match h.lu().solve(&(-&grad)) {
                        Some(s) => s,
                        None => break,
                    }
                }
            };
            let decrement = -grad.dot(&step);
            if decrement / 2.0 <= 1e-12 {
                break;
            }
            let f0 = value(&y, t).unwrap_or(f64::INFINITY);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand = &y + &step * alpha;
                if let Some(f1) = value(&cand, t) {
                    if f1 <= f0 - 0.25 * alpha * decrement {
                        y = cand;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            newton_steps += 1;
            if !accepted {
                break;
            }
        }
        if m / t <= GAP_TARGET {
            break;
        }
        t *= 10.0;
    }

    let x = DVector::from_column_slice(&x0) + &z * &y;
    let x: Vec<f64> = x.iter().copied().collect();
    meta.iterations = newton_steps;
    meta.gap = Some(m / t);
    Ok(SolveResult { status: SolveStatus::Optimal, objective: ent.value(&x), values: x, meta })
}

/// Minimizes an entropy objective by multistart successive linearization.
///
/// The first starts maximize each entropy argument in turn; the rest maximize
/// a random Dirichlet mix of them drawn from `seed`. The best local optimum wins,
/// ties going to the lowest start index.
pub fn minimize_entropy(p: &MathProgram, starts: usize, seed: u64) -> Result<SolveResult, SolverError> {
    let ent = entropy_of(p, Sense::Minimize)?;
    let nv = p.vars.len();
    let starts = starts.max(1);
    let k = ent.args.len();

    let run = |index: usize| -> Result<Option<(StartTrace, Vec<f64>)>, SolverError> {
        let (origin, weights) = if index < k {
            let mut w = vec![0.0; k];
            w[index] = 1.0;
            (StartOrigin::Vertex(index), w)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = raw.iter().sum();
            (StartOrigin::Random, raw.into_iter().map(|v: f64| v / total).collect())
        };
        let mut obj = LinExpr::new();
        for (a, w) in ent.args.iter().zip(&weights) {
            obj.add_expr(a, *w);
        }
        let r = solve_lp(&with_linear(p, obj, Sense::Maximize))?;
        if r.status != SolveStatus::Optimal {
            return Ok(None);
        }
        let mut x = r.values;
        let initial = ent.value(&x);
        let mut f = initial;
        let mut iterations = 0;
        while iterations < SLA_CAP {
            let g = ent.gradient(&x, nv);
            let mut lin = LinExpr::new();
            for (i, c) in g.into_iter().enumerate() {
                lin.add(Var(i), c);
            }
            let r = solve_lp(&with_linear(p, lin, Sense::Minimize))?;
            if r.status != SolveStatus::Optimal {
                break;
            }
            let f1 = ent.value(&r.values);
            iterations += 1;
            if f1 < f - 1e-12 {
                x = r.values;
                f = f1;
            } else {
                break;
            }
        }
        let trace = StartTrace { index, origin, initial, last: f, iterations, descended: f < initial - 1e-12 };
        Ok(Some((trace, x)))
    };

    let outcomes: Vec<_> = (0..starts).into_par_iter().map(run).collect::<Result<_, _>>()?;
    let mut meta = SolveMeta { seed: Some(seed), ..SolveMeta::default() };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (trace, x) in outcomes.into_iter().flatten() {
        meta.iterations += trace.iterations;
        if best.as_ref().is_none_or(|(f, _)| trace.last < *f - 1e-12) {
            best = Some((trace.last, x));
        }
        meta.starts.push(trace);
    }
    match best {
        Some((f, x)) => Ok(SolveResult { status: SolveStatus::LocalOptimum, objective: f, values: x, meta }),
        None => Ok(SolveResult::without_point(SolveStatus::Infeasible, meta)),
    }
}
