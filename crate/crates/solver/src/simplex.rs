//! Dense two-phase primal simplex.
//!
//! Variables are shifted onto `y >= 0` (free ones split), finite upper bounds
//! become rows, and every row gets either a slack or an artificial basis column.
//! Pricing is Dantzig's rule until a run of degenerate pivots switches the
//! solve to Bland's rule for good, so every run is deterministic.

use nalgebra::{DMatrix, DVector};

use crate::error::SolverError;
use crate::program::{Cmp, LinExpr, MathProgram, Objective, Sense};
use crate::result::{SolveMeta, SolveResult, SolveStatus};
use crate::tol;

const DEGENERATE_RUN: usize = 50;

/// Solves a linear program. Binary variables are rejected; use `solve_milp`.
pub fn solve_lp(p: &MathProgram) -> Result<SolveResult, SolverError> {
    p.validate()?;
    if p.has_binaries() {
        return Err(SolverError::WrongObjective("solve_lp got binary variables"));
    }
    let Objective::Linear(obj) = &p.objective else {
        return Err(SolverError::WrongObjective("solve_lp needs a linear objective"));
    };
    let lower: Vec<f64> = p.vars.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = p.vars.iter().map(|v| v.upper).collect();
    solve_relaxation(p, obj, &lower, &upper)
}

#[derive(Clone, Copy, Debug)]
enum Map {
    Fixed(f64),
    Shift { off: f64, col: usize, sign: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major, `cols + 1` entries per row, rhs last.
    a: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.cols + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.a[i * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, r: usize, e: usize, d: &mut [f64], z: &mut f64) {
        let w = self.cols + 1;
        let piv = self.a[r * w + e];
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v /= piv;
        }
        let prow: Vec<f64> = self.a[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * w + e];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * w..(i + 1) * w];
            for (v, &pv) in row.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            row[e] = 0.0;
        }
        let f = d[e];
        if f != 0.0 {
            for (v, &pv) in d.iter_mut().zip(&prow[..self.cols]) {
                *v -= f * pv;
            }
            d[e] = 0.0;
            *z -= f * prow[self.cols];
        }
        self.basis[r] = e;
    }
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

/// Minimizes `cost·x` over the tableau, entering only columns in `allowed`.
/// Returns reduced costs and the objective alongside the outcome.
fn optimize(
    t: &mut Tableau,
    cost: &[f64],
    allowed: &[bool],
    iterations: &mut usize,
    cap: usize,
) -> (Outcome, Vec<f64>, f64) {
    let mut d = cost.to_vec();
    let mut z = 0.0;
    for i in 0..t.rows {
        let cb = cost[t.basis[i]];
        if cb != 0.0 {
            for (j, dj) in d.iter_mut().enumerate() {
                *dj -= cb * t.at(i, j);
            }
            z -= cb * t.rhs(i);
        }
    }
    // `z` tracks the negated objective; flip at the end.
    let mut bland = false;
    let mut degenerate = 0usize;
    loop {
        if *iterations >= cap {
            return (Outcome::IterationLimit, d, -z);
        }
        let mut enter = None;
        let mut best = -tol::OPTIMALITY;
        for j in 0..t.cols {
            if !allowed[j] || d[j] >= -tol::OPTIMALITY {
                continue;
            }
            if bland {
                enter = Some(j);
                break;
            }
            if d[j] < best {
                best = d[j];
                enter = Some(j);
            }
        }
        let Some(e) = enter else {
            return (Outcome::Optimal, d, -z);
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..t.rows {
            let a = t.at(i, e);
            if a <= tol::PIVOT {
                continue;
            }
            let ratio = t.rhs(i).max(0.0) / a;
            leave = match leave {
                None => Some((i, ratio)),
                Some((r, best)) => {
                    if ratio < best - 1e-12 || (ratio <= best + 1e-12 && t.basis[i] < t.basis[r]) {
                        Some((i, ratio))
                    } else {
                        Some((r, best))
                    }
                }
            };
        }
        let Some((r, ratio)) = leave else {
            return (Outcome::Unbounded, d, -z);
        };
        if ratio <= 1e-12 {
            degenerate += 1;
            if degenerate > DEGENERATE_RUN {
                bland = true;
            }
        } else {
            degenerate = 0;
        }
        t.pivot(r, e, &mut d, &mut z);
        *iterations += 1;
    }
}

/// LP over `p`'s constraints with replacement bounds and objective; binaries
/// are treated as continuous. Used directly by branch-and-bound.
pub(crate) fn solve_relaxation(
    p: &MathProgram,
    obj: &LinExpr,
    lower: &[f64],
    upper: &[f64],
) -> Result<SolveResult, SolverError> {
    let nv = p.vars.len();
    let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let infeasible = || Ok(SolveResult::without_point(SolveStatus::Infeasible, SolveMeta::default()));

    let mut maps = Vec::with_capacity(nv);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for i in 0..nv {
        let (l, u) = (lower[i], upper[i]);
        if l > u + tol::FEASIBILITY {
            return infeasible();
        }
        let m = if l.is_finite() && u.is_finite() && u - l <= 1e-12 {
            Map::Fixed(l)
        } else if l.is_finite() {
            if u.is_finite() {
                bound_rows.push((ncols, u - l));
            }
            ncols += 1;
            Map::Shift { off: l, col: ncols - 1, sign: 1.0 }
        } else if u.is_finite() {
            ncols += 1;
            Map::Shift { off: u, col: ncols - 1, sign: -1.0 }
        } else {
            ncols += 2;
            Map::Split { pos: ncols - 2, neg: ncols - 1 }
        };
        maps.push(m);
    }
    let nstruct = ncols;

    // Structural rows: (dense coefficients, cmp, rhs).
    let mut rows: Vec<(Vec<f64>, Cmp, f64)> = Vec::new();
    for c in &p.constraints {
        let mut coef = vec![0.0; nstruct];
        let mut rhs = c.rhs - c.expr.constant;
        for &(v, a) in &c.expr.terms {
            match maps[v.0] {
                Map::Fixed(x) => rhs -= a * x,
                Map::Shift { off, col, sign } => {
                    rhs -= a * off;
                    coef[col] += a * sign;
                }
                Map::Split { pos, neg } => {
                    coef[pos] += a;
                    coef[neg] -= a;
                }
            }
        }
        if coef.iter().all(|&a| a == 0.0) {
            let ok = match c.cmp {
                Cmp::Le => rhs >= -tol::FEASIBILITY,
                Cmp::Ge => rhs <= tol::FEASIBILITY,
                Cmp::Eq => rhs.abs() <= tol::FEASIBILITY,
            };
            if !ok {
                return infeasible();
            }
            continue;
        }
        rows.push((coef, c.cmp, rhs));
    }
    for &(col, cap) in &bound_rows {
        let mut coef = vec![0.0; nstruct];
        coef[col] = 1.0;
        rows.push((coef, Cmp::Le, cap));
    }

    let m = rows.len();
    let nslack = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
    // Decide basis columns: slack when it enters with +1 after rhs normalization.
    let mut slack_of = vec![None; m];
    let mut flip = vec![false; m];
    let mut needs_art = vec![false; m];
    let mut s = nstruct;
    for (i, (_, cmp, rhs)) in rows.iter().enumerate() {
        flip[i] = *rhs < 0.0;
        if *cmp != Cmp::Eq {
            slack_of[i] = Some(s);
            s += 1;
        }
        let slack_sign = match cmp {
            Cmp::Le => 1.0,
            Cmp::Ge => -1.0,
            Cmp::Eq => 0.0,
        } * if flip[i] { -1.0 } else { 1.0 };
        needs_art[i] = slack_sign <= 0.0;
    }
    let nart = needs_art.iter().filter(|&&b| b).count();
    let cols = nstruct + nslack + nart;
    let w = cols + 1;
    let mut a = vec![0.0; m * w];
    let mut basis = vec![0usize; m];
    let mut art = nstruct + nslack;
    for (i, (coef, cmp, rhs)) in rows.iter().enumerate() {
        let f = if flip[i] { -1.0 } else { 1.0 };
        let row = &mut a[i * w..(i + 1) * w];
        for (dst, &c) in row[..nstruct].iter_mut().zip(coef) {
            *dst = f * c;
        }
        if let Some(sc) = slack_of[i] {
            row[sc] = f * if *cmp == Cmp::Le { 1.0 } else { -1.0 };
        }
        row[cols] = f * rhs;
        if needs_art[i] {
            row[art] = 1.0;
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = slack_of[i].expect("slack basis");
        }
    }
    let a0 = a.clone();
    let init_basis = basis.clone();
    let mut t = Tableau { rows: m, cols, a, basis };

    let mut cost = vec![0.0; cols];
    let mut obj_const = obj.constant;
    for &(v, c) in &obj.terms {
        match maps[v.0] {
            Map::Fixed(x) => obj_const += c * x,
            Map::Shift { off, col, sign: sg } => {
                obj_const += c * off;
                cost[col] += sign * c * sg;
            }
            Map::Split { pos, neg } => {
                cost[pos] += sign * c;
                cost[neg] -= sign * c;
            }
        }
    }

    let cap = 20_000 + 50 * (m + cols);
    let mut iterations = 0usize;
    let first_art = nstruct + nslack;
    if nart > 0 {
        let mut c1 = vec![0.0; cols];
        for v in &mut c1[first_art..] {
            *v = 1.0;
        }
        let allowed = vec![true; cols];
        let (outcome, _, z) = optimize(&mut t, &c1, &allowed, &mut iterations, cap);
        let meta = SolveMeta { iterations, ..SolveMeta::default() };
        match outcome {
            Outcome::IterationLimit => {
                return Ok(SolveResult::without_point(SolveStatus::IterationLimit, meta));
            }
            Outcome::Unbounded => {
                return Err(SolverError::Numerical("phase one reported unbounded".into()));
            }
            Outcome::Optimal => {}
        }
        let scale = rows.iter().fold(1.0f64, |acc, r| acc.max(r.2.abs()));
        if z > tol::FEASIBILITY * scale {
            return Ok(SolveResult::without_point(SolveStatus::Infeasible, meta));
        }
        // Drive zero-valued artificials out of the basis where possible.
        let mut scratch = vec![0.0; cols];
        let mut zz = 0.0;
        for i in 0..m {
            if t.basis[i] < first_art {
                continue;
            }
            if let Some(j) = (0..first_art).find(|&j| t.at(i, j).abs() > 1e-7) {
                t.pivot(i, j, &mut scratch, &mut zz);
            }
        }
    }

    let mut allowed = vec![true; cols];
    for v in &mut allowed[first_art..] {
        *v = false;
    }
    let (outcome, d, _) = optimize(&mut t, &cost, &allowed, &mut iterations, cap);
    let mut meta = SolveMeta { iterations, ..SolveMeta::default() };
    match outcome {
        Outcome::IterationLimit => return Ok(SolveResult::without_point(SolveStatus::IterationLimit, meta)),
        Outcome::Unbounded => {
            let mut r = SolveResult::without_point(SolveStatus::Unbounded, meta);
            r.objective = if p.sense == Sense::Maximize { f64::INFINITY } else { f64::NEG_INFINITY };
            return Ok(r);
        }
        Outcome::Optimal => {}
    }

    let mut y = vec![0.0; cols];
    for i in 0..m {
        y[t.basis[i]] = t.rhs(i);
    }
    refine(&a0, m, cols, &t.basis, &mut y);

    let mut x = vec![0.0; nv];
    for (i, mp) in maps.iter().enumerate() {
        x[i] = match *mp {
            Map::Fixed(v) => v,
            Map::Shift { off, col, sign } => off + sign * y[col].max(0.0),
            Map::Split { pos, neg } => y[pos] - y[neg],
        };
        if lower[i].is_finite() && x[i] < lower[i] && x[i] > lower[i] - 1e-9 {
            x[i] = lower[i];
        }
        if upper[i].is_finite() && x[i] > upper[i] && x[i] < upper[i] + 1e-9 {
            x[i] = upper[i];
        }
    }

    let worst = relaxation_violation(p, &x, lower, upper);
    if worst.0 > tol::FEASIBILITY {
        return Err(SolverError::Numerical(format!(
            "simplex point violates {} by {:.3e}",
            worst.1, worst.0
        )));
    }

    // Duals of the normalized rows, read off the initial basis columns.
    let mut dual = obj_const * sign;
    for i in 0..m {
        let yi = -d[init_basis[i]];
        dual += yi * a0[i * (cols + 1) + cols];
    }
    meta.dual_objective = Some(dual * sign);
    let objective = obj.eval(&x);
    Ok(SolveResult { status: SolveStatus::Optimal, objective, values: x, meta })
}

/// Re-solves `B x_B = b` from the original rows to shed accumulated pivot error.
fn refine(a0: &[f64], m: usize, cols: usize, basis: &[usize], y: &mut [f64]) {
    if m == 0 {
        return;
    }
    let w = cols + 1;
    let b = DMatrix::from_fn(m, m, |i, k| a0[i * w + basis[k]]);
    let rhs = DVector::from_fn(m, |i, _| a0[i * w + cols]);
    let Some(sol) = b.lu().solve(&rhs) else {
        return;
    };
    if sol.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return;
    }
    let drift = basis.iter().zip(sol.iter()).map(|(&k, v)| (y[k] - v).abs()).fold(0.0, f64::max);
    if drift > 1e-6 {
        return;
    }
    for (k, &col) in basis.iter().enumerate() {
        y[col] = sol[k].max(0.0);
    }
}

pub(crate) fn relaxation_violation(p: &MathProgram, x: &[f64], lower: &[f64], upper: &[f64]) -> (f64, String) {
    let mut worst = (0.0, String::new());
    for i in 0..x.len() {
        let v = (lower[i] - x[i]).max(x[i] - upper[i]).max(0.0);
        if v > worst.0 {
            worst = (v, p.vars[i].name.clone());
        }
    }
    for c in &p.constraints {
        let v = c.violation(x);
        if v > worst.0 {
            worst = (v, c.name.clone());
        }
    }
    worst
}
