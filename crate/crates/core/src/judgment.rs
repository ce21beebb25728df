//! Fuzzy judgment matrices: validation, completion under additive
//! consistency, repair of contradictory indirect statements, and
//! eigenvector utilities.

use std::fmt::Write;

use empnet_solver::{solve_lp, Cmp, LinExpr, MathProgram, Objective, Sense, SolveStatus, Var};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::index::{one_based, one_based_pair, one_based_sets};
use crate::inconsistency::enumerate_min_covers;
use crate::network::{UtilityKind, UtilityMatrix};

const RECIPROCITY_TOL: f64 = 1e-9;
const POWER_TOL: f64 = 1e-10;
const POWER_CAP: usize = 10_000;

#[derive(Deserialize)]
struct JudgmentJson {
    m: usize,
    rows: Vec<Vec<Option<f64>>>,
}

/// `m×m` preference degrees in `[0,1]`; `None` marks a missing judgment
/// (`null` in JSON).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JudgmentJson")]
pub struct FuzzyJudgmentMatrix {
    m: usize,
    rows: Vec<Vec<Option<f64>>>,
}

impl TryFrom<JudgmentJson> for FuzzyJudgmentMatrix {
    type Error = CoreError;

    fn try_from(raw: JudgmentJson) -> Result<Self> {
        if raw.rows.len() != raw.m {
            return Err(CoreError::invalid("rows", format!("expected {} rows, got {}", raw.m, raw.rows.len())));
        }
        Self::new(raw.rows)
    }
}

impl FuzzyJudgmentMatrix {
    /// Checks shape and finiteness only; see [`validate`] for the invariants.
    pub fn new(rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(CoreError::invalid("rows", "matrix is empty"));
        }
        for (s, r) in rows.iter().enumerate() {
            if r.len() != m {
                return Err(CoreError::invalid(format!("rows[{}]", s + 1), format!("expected {m} entries")));
            }
            if let Some(t) = r.iter().position(|v| v.is_some_and(|x| !x.is_finite())) {
                return Err(CoreError::invalid(format!("rows[{}][{}]", s + 1, t + 1), "not a finite number"));
            }
        }
        Ok(Self { m, rows })
    }

    pub fn complete_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, s: usize, t: usize) -> Option<f64> {
        self.rows[s][t]
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.rows
    }

    pub fn is_complete(&self) -> bool {
        self.rows.iter().flatten().all(Option::is_some)
    }

    /// Dense values; `None` if any cell is missing.
    pub fn values(&self) -> Option<Vec<Vec<f64>>> {
        self.rows.iter().map(|r| r.iter().copied().collect()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Diagonal,
    Reciprocity,
    Pairing,
    Range,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(with = "one_based")]
    pub s: usize,
    #[serde(with = "one_based")]
    pub t: usize,
}

/// Lists every broken invariant: diagonal 0.5, range, reciprocity and
/// pairwise missingness. Each unordered pair is reported once.
pub fn validate(r: &FuzzyJudgmentMatrix) -> Vec<Violation> {
    let mut out = Vec::new();
    for s in 0..r.m {
        if r.rows[s][s] != Some(0.5) {
            out.push(Violation { kind: ViolationKind::Diagonal, s, t: s });
        }
        for t in 0..r.m {
            if let Some(v) = r.rows[s][t] {
                if !(0.0..=1.0).contains(&v) {
                    out.push(Violation { kind: ViolationKind::Range, s, t });
                }
            }
        }
        for t in s + 1..r.m {
            match (r.rows[s][t], r.rows[t][s]) {
                (Some(a), Some(b)) if (a + b - 1.0).abs() > RECIPROCITY_TOL => {
                    out.push(Violation { kind: ViolationKind::Reciprocity, s, t })
                }
                (Some(_), None) | (None, Some(_)) => out.push(Violation { kind: ViolationKind::Pairing, s, t }),
                _ => {}
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntrinsicKind {
    /// `a_better ≽ a_worse`.
    Preference {
        #[serde(with = "one_based")]
        better: usize,
        #[serde(with = "one_based")]
        worse: usize,
    },
    /// `(a_s, a_t) ≽* (a_p, a_q)`: `r_st` at least `r_pq`.
    Intensity {
        #[serde(with = "one_based_pair")]
        first: (usize, usize),
        #[serde(with = "one_based_pair")]
        second: (usize, usize),
    },
}

fn default_true() -> bool {
    true
}

/// Indirect preference information from one expert about the alternatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicStatement {
    #[serde(with = "one_based")]
    pub dm: usize,
    #[serde(flatten)]
    pub kind: IntrinsicKind,
    #[serde(default = "default_true")]
    pub strict: bool,
}

impl IntrinsicStatement {
    pub fn preference(dm: usize, better: usize, worse: usize) -> Self {
        Self { dm, kind: IntrinsicKind::Preference { better, worse }, strict: true }
    }

    pub fn intensity(dm: usize, first: (usize, usize), second: (usize, usize)) -> Self {
        Self { dm, kind: IntrinsicKind::Intensity { first, second }, strict: true }
    }

    fn indices(&self) -> Vec<usize> {
        match self.kind {
            IntrinsicKind::Preference { better, worse } => vec![better, worse],
            IntrinsicKind::Intensity { first, second } => vec![first.0, first.1, second.0, second.1],
        }
    }

    pub fn describe(&self) -> String {
        let rel = if self.strict { "≻" } else { "≽" };
        match self.kind {
            IntrinsicKind::Preference { better, worse } => format!("a{} {rel} a{}", better + 1, worse + 1),
            IntrinsicKind::Intensity { first, second } => {
                format!("(a{},a{}) {rel}* (a{},a{})", first.0 + 1, first.1 + 1, second.0 + 1, second.1 + 1)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletionStatus {
    Completed,
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    /// Present whenever the completion program was feasible.
    pub completed: Option<FuzzyJudgmentMatrix>,
    /// `None` when no strict statement bounds ε.
    pub eps_star: Option<f64>,
    pub status: CompletionStatus,
}

/// Completion program over the upper triangle. Returns the program, the
/// upper-triangle variables (row-major `s<t`), and ε.
struct CompletionProgram {
    program: MathProgram,
    x: Vec<Vec<Option<Var>>>,
    eps: Var,
}

impl CompletionProgram {
    fn build(r: &FuzzyJudgmentMatrix, eps_bounds: (f64, f64)) -> Self {
        let m = r.m;
        let mut p = MathProgram::new(Sense::Maximize);
        let mut x = vec![vec![None; m]; m];
        for s in 0..m {
            for t in s + 1..m {
                let (lo, hi) = match r.rows[s][t] {
                    Some(v) => (v, v),
                    None => (0.0, 1.0),
                };
                x[s][t] = Some(p.add_var(format!("r_{}_{}", s + 1, t + 1), lo, hi));
            }
        }
        let eps = p.add_var("eps", eps_bounds.0, eps_bounds.1);
        let mut cp = Self { program: p, x, eps };
        for s in 0..m {
            for t in s + 1..m {
                for q in t + 1..m {
                    // r_sq + r_qt = r_st + 0.5
                    let mut e = cp.r(s, q);
                    e.add_expr(&cp.r(q, t), 1.0);
                    e.add_expr(&cp.r(s, t), -1.0);
                    cp.program.add_constraint(format!("consistency_{}_{}_{}", s + 1, t + 1, q + 1), e, Cmp::Eq, 0.5);
                }
            }
        }
        cp
    }

    /// `r_st` as an affine expression in the upper-triangle variables.
    fn r(&self, s: usize, t: usize) -> LinExpr {
        if s == t {
            LinExpr::constant(0.5)
        } else if s < t {
            LinExpr::var(self.x[s][t].expect("upper variable"))
        } else {
            let mut e = LinExpr::constant(1.0);
            e.add(self.x[t][s].expect("upper variable"), -1.0);
            e
        }
    }

    /// `lhs - rhs`, to be held `>= ε` (strict) or `>= 0`.
    fn gap(&self, st: &IntrinsicStatement) -> (LinExpr, f64) {
        match st.kind {
            IntrinsicKind::Preference { better, worse } => (self.r(better, worse), 0.5),
            IntrinsicKind::Intensity { first, second } => {
                let mut e = self.r(first.0, first.1);
                e.add_expr(&self.r(second.0, second.1), -1.0);
                (e, 0.0)
            }
        }
    }

    fn completed(&self, r: &FuzzyJudgmentMatrix, values: &[f64]) -> FuzzyJudgmentMatrix {
        let m = r.m;
        let rows = (0..m)
            .map(|s| {
                (0..m)
                    .map(|t| {
                        let v = self.r(s, t).eval(values);
                        Some(r.rows[s][t].unwrap_or((v * 1e12).round() / 1e12))
                    })
                    .collect()
            })
            .collect();
        FuzzyJudgmentMatrix { m, rows }
    }
}

fn check_statements(r: &FuzzyJudgmentMatrix, stmts: &[IntrinsicStatement]) -> Result<()> {
    for (k, st) in stmts.iter().enumerate() {
        if let Some(&bad) = st.indices().iter().find(|&&i| i >= r.m) {
            return Err(CoreError::invalid(
                format!("intrinsic_statements[{}]", k + 1),
                format!("alternative a{} out of range 1..={}", bad + 1, r.m),
            ));
        }
    }
    Ok(())
}

fn check_valid(r: &FuzzyJudgmentMatrix) -> Result<()> {
    match validate(r).first() {
        None => Ok(()),
        Some(v) => Err(CoreError::invalid(format!("judgment ({},{})", v.s + 1, v.t + 1), format!("{:?} violation", v.kind))),
    }
}

/// Completes `r` by maximizing the shared slack ε of its statements under
/// additive consistency.
pub fn complete(r: &FuzzyJudgmentMatrix, stmts: &[IntrinsicStatement]) -> Result<CompletionResult> {
    check_valid(r)?;
    check_statements(r, stmts)?;
    let any_strict = stmts.iter().any(|s| s.strict);
    let bounds = if any_strict { (f64::NEG_INFINITY, 1.0) } else { (0.0, 0.0) };
    let mut cp = CompletionProgram::build(r, bounds);
    for (k, st) in stmts.iter().enumerate() {
        let (mut e, rhs) = cp.gap(st);
        if st.strict {
            e.add(cp.eps, -1.0);
        }
        cp.program.add_constraint(format!("statement_{}", k + 1), e, Cmp::Ge, rhs);
    }
    cp.program.set_objective(Objective::Linear(LinExpr::var(cp.eps)));
    let res = solve_lp(&cp.program).map_err(|source| CoreError::Solver { source, dump: empnet_solver::dump_lp(&cp.program) })?;
    match res.status {
        SolveStatus::Optimal => {
            let eps_star = any_strict.then_some(res.objective);
            let ok = eps_star.is_none_or(|e| e > 1e-9);
            Ok(CompletionResult {
                completed: Some(cp.completed(r, &res.values)),
                eps_star,
                status: if ok { CompletionStatus::Completed } else { CompletionStatus::Inconsistent },
            })
        }
        SolveStatus::Infeasible => Ok(CompletionResult { completed: None, eps_star: None, status: CompletionStatus::Inconsistent }),
        other => Err(CoreError::Internal(format!("completion LP ended {other:?}"))),
    }
}

/// Outcome of judgment-level repair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum JudgmentRepair {
    /// Minimum-cardinality statement sets (positions in the input list).
    Sets {
        #[serde(with = "one_based_sets")]
        sets: Vec<Vec<usize>>,
        exhausted: bool,
    },
    /// The known entries contradict additive consistency on their own.
    Structural { reason: String },
}

/// Finds minimum sets of statements whose removal lets completion succeed
/// with slack at least `eps_min`.
pub fn judgment_inconsistency(
    r: &FuzzyJudgmentMatrix,
    stmts: &[IntrinsicStatement],
    eps_min: f64,
    big_m: f64,
    limit: usize,
) -> Result<JudgmentRepair> {
    let first = complete(r, stmts)?;
    if first.status == CompletionStatus::Completed {
        return Err(CoreError::Precondition("statements are consistent; nothing to repair".into()));
    }
    let mut bare = CompletionProgram::build(r, (0.0, 0.0));
    bare.program.set_objective(Objective::Linear(LinExpr::new()));
    let base = solve_lp(&bare.program).map_err(|source| CoreError::Solver { source, dump: String::new() })?;
    if base.status != SolveStatus::Optimal {
        return Ok(JudgmentRepair::Structural {
            reason: "known entries violate additive consistency with every statement removed".into(),
        });
    }
    let mut cp = CompletionProgram::build(r, (eps_min, eps_min));
    cp.program.sense = Sense::Minimize;
    let mut nus = Vec::new();
    let mut obj = LinExpr::new();
    for (k, st) in stmts.iter().enumerate() {
        let nu = cp.program.add_binary(format!("nu_{}", k + 1));
        let (mut e, rhs) = cp.gap(st);
        if st.strict {
            e.add(cp.eps, -1.0);
        }
        e.add(nu, big_m);
        cp.program.add_constraint(format!("statement_{}", k + 1), e, Cmp::Ge, rhs);
        obj.add(nu, 1.0);
        nus.push(nu);
    }
    cp.program.set_objective(Objective::Linear(obj));
    let (sets, exhausted) = enumerate_min_covers(cp.program, &nus, limit)?;
    Ok(JudgmentRepair::Sets { sets, exhausted })
}

/// Perron eigenvalue and eigenvector (summing to one) of a complete matrix.
pub fn principal_eigenvector(r: &FuzzyJudgmentMatrix) -> Result<(f64, Vec<f64>)> {
    let a = r.values().ok_or_else(|| CoreError::Precondition("eigenvector needs a complete matrix".into()))?;
    let m = r.m;
    let mut u = vec![1.0 / m as f64; m];
    let mut change = f64::INFINITY;
    for _ in 0..POWER_CAP {
        let next: Vec<f64> = a.iter().map(|row| row.iter().zip(&u).map(|(x, y)| x * y).sum()).collect();
        let lambda: f64 = next.iter().sum();
        if !(lambda > 0.0) {
            return Err(CoreError::Precondition("matrix has no positive Perron root".into()));
        }
        let next: Vec<f64> = next.into_iter().map(|v| v / lambda).collect();
        change = next.iter().zip(&u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        u = next;
        if change < POWER_TOL {
            let lambda: f64 = a.iter().map(|row| row.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>()).sum();
            return Ok((lambda, u));
        }
    }
    Err(CoreError::NoConvergence { iterations: POWER_CAP, change })
}

/// Intrinsic utilities: row `j` is expert `j`'s Perron vector.
pub fn intrinsic_matrix(matrices: &[FuzzyJudgmentMatrix]) -> Result<UtilityMatrix> {
    let rows = matrices
        .iter()
        .enumerate()
        .map(|(j, r)| {
            principal_eigenvector(r).map(|(_, u)| u).map_err(|e| match e {
                CoreError::Precondition(msg) => CoreError::Precondition(format!("expert d{}: {msg}", j + 1)),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    UtilityMatrix::new(UtilityKind::Intrinsic, rows)
}

/// Largest additive-consistency residual over all triples.
pub fn consistency_residual(r: &FuzzyJudgmentMatrix) -> Option<f64> {
    let a = r.values()?;
    let m = r.m;
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                worst = worst.max((a[i][k] + a[k][j] - a[i][j] - 0.5).abs());
            }
        }
    }
    Some(worst)
}

/// CSV of the upper triangle: `s,t,value,source` with `fixed` or `inferred`.
pub fn completion_csv(original: &FuzzyJudgmentMatrix, completed: &FuzzyJudgmentMatrix) -> String {
    let mut out = String::from("s,t,value,source\n");
    for s in 0..completed.m {
        for t in s + 1..completed.m {
            let v = completed.rows[s][t].unwrap_or(f64::NAN);
            let source = if original.rows[s][t].is_some() { "fixed" } else { "inferred" };
            let _ = writeln!(out, "{},{},{v:.4},{source}", s + 1, t + 1);
        }
    }
    out
}
