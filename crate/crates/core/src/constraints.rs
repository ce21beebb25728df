//! Empathic-phase statements and the linear system of compatible networks
//! they induce over the weights `w_ij` and a shared slack ε.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use empnet_solver::{dump_lp, solve_lp, Cmp, LinExpr, MathProgram, Objective, Sense, SolveResult, SolveStatus, Var};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};
use crate::index::{one_based, one_based_pair};
use crate::network::{EmpathicMatrix, MatrixKind, Thresholds, UtilityMatrix};

/// ε values within this of zero count as zero.
pub const EPS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// Holds with margin ε.
    #[default]
    Strict,
    /// Holds without margin.
    Weak,
    /// Holds with equality.
    Indifferent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    #[default]
    Analyst,
    Dm(#[serde(with = "one_based")] usize),
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StatementPayload {
    /// Expert `dm`'s empathic utility ranks `first` over `second`.
    Preference {
        #[serde(with = "one_based")]
        dm: usize,
        #[serde(with = "one_based")]
        first: usize,
        #[serde(with = "one_based")]
        second: usize,
        #[serde(default)]
        relation: Relation,
    },
    /// The utility gap on pair `first` exceeds the gap on pair `second`.
    Intensity {
        #[serde(with = "one_based")]
        dm: usize,
        #[serde(with = "one_based_pair")]
        first: (usize, usize),
        #[serde(with = "one_based_pair")]
        second: (usize, usize),
        #[serde(default)]
        relation: Relation,
    },
    /// `w_ij = 0`.
    ZeroWeight {
        #[serde(with = "one_based")]
        i: usize,
        #[serde(with = "one_based")]
        j: usize,
    },
    /// `w_ij >= ε'`: the arc is present.
    ArcPresence {
        #[serde(with = "one_based")]
        i: usize,
        #[serde(with = "one_based")]
        j: usize,
    },
    /// `w_ij` against `factor · w_kh`.
    WeightDominance {
        #[serde(with = "one_based")]
        i: usize,
        #[serde(with = "one_based")]
        j: usize,
        #[serde(with = "one_based")]
        k: usize,
        #[serde(with = "one_based")]
        h: usize,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        factor: f64,
        #[serde(default)]
        relation: Relation,
    },
    /// `w_ij / ω_j >= 1/2`.
    HalfShare {
        #[serde(with = "one_based")]
        i: usize,
        #[serde(with = "one_based")]
        j: usize,
    },
    /// `ω_i - ω_j` against `ω_k - ω_h`.
    CentralityGap {
        #[serde(with = "one_based")]
        i: usize,
        #[serde(with = "one_based")]
        j: usize,
        #[serde(with = "one_based")]
        k: usize,
        #[serde(with = "one_based")]
        h: usize,
        #[serde(default)]
        relation: Relation,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpathicStatement {
    pub id: String,
    #[serde(default)]
    pub source: Source,
    #[serde(flatten)]
    pub payload: StatementPayload,
}

impl EmpathicStatement {
    pub fn new(id: impl Into<String>, payload: StatementPayload) -> Self {
        Self { id: id.into(), source: Source::Analyst, payload }
    }

    /// Human-readable form with one-based indices.
    pub fn describe(&self) -> String {
        use StatementPayload::*;
        let rel = |r: Relation, strict: &str, weak: &str, eq: &str| match r {
            Relation::Strict => strict.to_string(),
            Relation::Weak => weak.to_string(),
            Relation::Indifferent => eq.to_string(),
        };
        match &self.payload {
            Preference { dm, first, second, relation } => {
                format!("a{} {} a{} for d{}", first + 1, rel(*relation, "≻", "≽", "∼"), second + 1, dm + 1)
            }
            Intensity { dm, first, second, relation } => format!(
                "(a{},a{}) {} (a{},a{}) for d{}",
                first.0 + 1,
                first.1 + 1,
                rel(*relation, "≻*", "≽*", "∼*"),
                second.0 + 1,
                second.1 + 1,
                dm + 1
            ),
            ZeroWeight { i, j } => format!("w{}{} = 0", i + 1, j + 1),
            ArcPresence { i, j } => format!("w{}{} ≥ ε'", i + 1, j + 1),
            WeightDominance { i, j, k, h, factor, relation } => {
                let f = if *factor == 1.0 { String::new() } else { format!("{factor}·") };
                format!("w{}{} {} {f}w{}{}", i + 1, j + 1, rel(*relation, ">", "≥", "="), k + 1, h + 1)
            }
            HalfShare { i, j } => format!("w{}{}/ω{} ≥ 1/2", i + 1, j + 1, j + 1),
            CentralityGap { i, j, k, h, relation } => format!(
                "ω{} - ω{} {} ω{} - ω{}",
                i + 1,
                j + 1,
                rel(*relation, ">", "≥", "="),
                k + 1,
                h + 1
            ),
        }
    }
}

/// One coefficient on `w_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(with = "one_based")]
    pub i: usize,
    #[serde(with = "one_based")]
    pub j: usize,
    pub coef: f64,
}

/// `Σ coef·w_ij - eps·ε >= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub terms: Vec<Term>,
    pub eps: f64,
    pub rhs: f64,
}

impl LinearRow {
    pub fn lhs(&self, w: &[Vec<f64>], eps: f64) -> f64 {
        self.terms.iter().map(|t| t.coef * w[t.i][t.j]).sum::<f64>() - self.eps * eps
    }

    fn negated(&self) -> Self {
        let terms = self.terms.iter().map(|t| Term { coef: -t.coef, ..t.clone() }).collect();
        Self { terms, eps: self.eps, rhs: -self.rhs }
    }

    fn render(&self) -> String {
        let mut s = String::new();
        for t in &self.terms {
            let sign = if t.coef < 0.0 { '-' } else { '+' };
            let _ = write!(s, "{sign} {} w_{}_{} ", fmt_num(t.coef.abs()), t.i + 1, t.j + 1);
        }
        if self.eps != 0.0 {
            let _ = write!(s, "- {}eps ", if self.eps == 1.0 { String::new() } else { format!("{} ", fmt_num(self.eps)) });
        }
        if s.is_empty() {
            s.push_str("0 ");
        }
        let _ = write!(s, ">= {}", fmt_num(self.rhs));
        s
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// All rows emitted by one statement; they are kept or relaxed together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintGroup {
    pub tag: String,
    pub rows: Vec<LinearRow>,
}

/// The compatible-network system: statement groups plus the base block
/// (unit row sums, nonnegative off-diagonals, diagonals at least ε').
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSystem {
    pub n: usize,
    pub eps_prime: f64,
    pub utilities: UtilityMatrix,
    pub statements: Vec<EmpathicStatement>,
    pub groups: Vec<ConstraintGroup>,
}

/// Optimal shared slack of a system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EpsStar {
    Optimal { value: f64 },
    Infeasible,
    Unbounded,
}

impl EpsStar {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Optimal { value } => Some(value),
            _ => None,
        }
    }

    /// ε* > 0, counting an unbounded ε as positive.
    pub fn is_positive(self) -> bool {
        match self {
            Self::Optimal { value } => value > EPS_TOL,
            Self::Unbounded => true,
            Self::Infeasible => false,
        }
    }

    /// Four-decimal rendering used in CSV exports.
    pub fn render(self) -> String {
        match self {
            Self::Optimal { value } => format!("{value:.4}"),
            Self::Infeasible => "infeasible".into(),
            Self::Unbounded => "unbounded".into(),
        }
    }
}

struct RowBuilder {
    terms: BTreeMap<(usize, usize), f64>,
}

impl RowBuilder {
    fn new() -> Self {
        Self { terms: BTreeMap::new() }
    }

    fn add(&mut self, i: usize, j: usize, c: f64) {
        *self.terms.entry((i, j)).or_insert(0.0) += c;
    }

    /// `+ sign · ω_j` as a column sum.
    fn omega(&mut self, n: usize, j: usize, sign: f64) {
        for r in 0..n {
            self.add(r, j, sign);
        }
    }

    /// `+ sign · u_dm(a_s)` expanded through `U^I`.
    fn utility(&mut self, u: &UtilityMatrix, dm: usize, s: usize, sign: f64) {
        for k in 0..u.n() {
            self.add(dm, k, sign * u.get(k, s));
        }
    }

    fn row(self, eps: f64, rhs: f64) -> LinearRow {
        let terms = self
            .terms
            .into_iter()
            .filter(|&(_, c)| c.abs() > 1e-15)
            .map(|((i, j), coef)| Term { i, j, coef })
            .collect();
        LinearRow { terms, eps, rhs }
    }
}

fn rows_for(b: RowBuilder, relation: Relation) -> Vec<LinearRow> {
    match relation {
        Relation::Strict => vec![b.row(1.0, 0.0)],
        Relation::Weak => vec![b.row(0.0, 0.0)],
        Relation::Indifferent => {
            let r = b.row(0.0, 0.0);
            let neg = r.negated();
            vec![r, neg]
        }
    }
}

fn check_statement(k: usize, st: &EmpathicStatement, n: usize, m: usize) -> Result<()> {
    use StatementPayload::*;
    let field = |name: &str| format!("statements[{}].{name}", k + 1);
    let node = |name: &str, v: usize| {
        if v < n { Ok(()) } else { Err(CoreError::invalid(field(name), format!("node {} out of range 1..={n}", v + 1))) }
    };
    let alt = |name: &str, v: usize| {
        if v < m {
            Ok(())
        } else {
            Err(CoreError::invalid(field(name), format!("alternative {} out of range 1..={m}", v + 1)))
        }
    };
    if st.id.trim().is_empty() {
        return Err(CoreError::invalid(field("id"), "statement id is empty"));
    }
    if let Source::Dm(d) = st.source {
        node("source", d)?;
    }
    match &st.payload {
        Preference { dm, first, second, .. } => {
            node("dm", *dm)?;
            alt("first", *first)?;
            alt("second", *second)
        }
        Intensity { dm, first, second, .. } => {
            node("dm", *dm)?;
            alt("first", first.0)?;
            alt("first", first.1)?;
            alt("second", second.0)?;
            alt("second", second.1)
        }
        ZeroWeight { i, j } | ArcPresence { i, j } => {
            node("i", *i)?;
            node("j", *j)?;
            if i == j {
                return Err(CoreError::invalid(field("j"), "arc statements need distinct nodes"));
            }
            Ok(())
        }
        HalfShare { i, j } => {
            node("i", *i)?;
            node("j", *j)
        }
        WeightDominance { i, j, k: kk, h, factor, .. } => {
            node("i", *i)?;
            node("j", *j)?;
            node("k", *kk)?;
            node("h", *h)?;
            if !(factor.is_finite() && *factor >= 0.0) {
                return Err(CoreError::invalid(field("factor"), "must be finite and nonnegative"));
            }
            Ok(())
        }
        CentralityGap { i, j, k: kk, h, .. } => {
            node("i", *i)?;
            node("j", *j)?;
            node("k", *kk)?;
            node("h", *h)
        }
    }
}

fn emit(st: &EmpathicStatement, u: &UtilityMatrix, eps_prime: f64) -> Vec<LinearRow> {
    use StatementPayload::*;
    let n = u.n();
    let mut b = RowBuilder::new();
    match &st.payload {
        Preference { dm, first, second, relation } => {
            b.utility(u, *dm, *first, 1.0);
            b.utility(u, *dm, *second, -1.0);
            rows_for(b, *relation)
        }
        Intensity { dm, first, second, relation } => {
            b.utility(u, *dm, first.0, 1.0);
            b.utility(u, *dm, first.1, -1.0);
            b.utility(u, *dm, second.0, -1.0);
            b.utility(u, *dm, second.1, 1.0);
            rows_for(b, *relation)
        }
        ZeroWeight { i, j } => {
            b.add(*i, *j, -1.0);
            vec![b.row(0.0, 0.0)]
        }
        ArcPresence { i, j } => {
            b.add(*i, *j, 1.0);
            vec![b.row(0.0, eps_prime)]
        }
        WeightDominance { i, j, k, h, factor, relation } => {
            b.add(*i, *j, 1.0);
            b.add(*k, *h, -factor);
            rows_for(b, *relation)
        }
        HalfShare { i, j } => {
            b.add(*i, *j, 2.0);
            b.omega(n, *j, -1.0);
            vec![b.row(0.0, 0.0)]
        }
        CentralityGap { i, j, k, h, relation } => {
            b.omega(n, *i, 1.0);
            b.omega(n, *j, -1.0);
            b.omega(n, *k, -1.0);
            b.omega(n, *h, 1.0);
            rows_for(b, *relation)
        }
    }
}

/// Builds the system of compatible networks for `stmts` against `U^I`.
pub fn assemble(u: &UtilityMatrix, stmts: &[EmpathicStatement], t: &Thresholds) -> Result<ConstraintSystem> {
    let n = u.n();
    t.validate(n)?;
    let mut seen = HashSet::new();
    let mut groups = Vec::with_capacity(stmts.len());
    for (k, st) in stmts.iter().enumerate() {
        check_statement(k, st, n, u.m())?;
        if !seen.insert(st.id.as_str()) {
            return Err(CoreError::invalid(format!("statements[{}].id", k + 1), format!("duplicate id {:?}", st.id)));
        }
        groups.push(ConstraintGroup { tag: st.id.clone(), rows: emit(st, u, t.eps_prime) });
    }
    Ok(ConstraintSystem { n, eps_prime: t.eps_prime, utilities: u.clone(), statements: stmts.to_vec(), groups })
}

impl ConstraintSystem {
    pub fn group(&self, tag: &str) -> Option<&ConstraintGroup> {
        self.groups.iter().find(|g| g.tag == tag)
    }

    pub fn statement(&self, tag: &str) -> Option<&EmpathicStatement> {
        self.statements.iter().find(|s| s.id == tag)
    }

    /// A copy without the statements tagged in `drop`.
    pub fn without(&self, drop: &[String]) -> Self {
        let keep = |tag: &String| !drop.contains(tag);
        Self {
            n: self.n,
            eps_prime: self.eps_prime,
            utilities: self.utilities.clone(),
            statements: self.statements.iter().filter(|s| keep(&s.id)).cloned().collect(),
            groups: self.groups.iter().filter(|g| keep(&g.tag)).cloned().collect(),
        }
    }

    /// Content hash identifying the system for caching.
    pub fn fingerprint(&self) -> String {
        let body = serde_json::to_vec(&(self.n, self.eps_prime, &self.groups)).expect("system serializes");
        hex::encode(Sha256::digest(&body))
    }

    /// One relation per line, each prefixed by its tag.
    pub fn dump(&self) -> String {
        let n = self.n;
        let mut out = String::new();
        for i in 0..n {
            let _ = writeln!(out, "base: sum_k w_{}_k = 1", i + 1);
        }
        let _ = writeln!(out, "base: w_i_j >= 0 for i != j");
        let _ = writeln!(out, "base: w_j_j >= {} for all j", fmt_num(self.eps_prime));
        for g in &self.groups {
            let what = self.statement(&g.tag).map(EmpathicStatement::describe).unwrap_or_default();
            let _ = writeln!(out, "# {}: {what}", g.tag);
            for r in &g.rows {
                let _ = writeln!(out, "{}: {}", g.tag, r.render());
            }
        }
        out
    }

    /// Direct substitution of `w` and `eps` into every base row and group.
    /// Returns the labels of violated constraints. `free_diagonal[j]` lifts
    /// the diagonal floor on node `j`.
    pub fn verify(&self, w: &EmpathicMatrix, eps: f64, tol: f64, free_diagonal: &[bool]) -> Vec<String> {
        let rows = w.rows();
        let mut bad = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            if (r.iter().sum::<f64>() - 1.0).abs() > tol {
                bad.push(format!("base row sum {}", i + 1));
            }
            for (j, &v) in r.iter().enumerate() {
                let floor = if i == j && !free_diagonal.get(j).copied().unwrap_or(false) { self.eps_prime } else { 0.0 };
                if v < floor - tol {
                    bad.push(format!("base bound w_{}_{}", i + 1, j + 1));
                }
            }
        }
        for g in &self.groups {
            if g.rows.iter().any(|r| r.lhs(rows, eps) < r.rhs - tol) {
                bad.push(g.tag.clone());
            }
        }
        bad
    }

    /// Maximizes ε over the system.
    pub fn feasible(&self) -> Result<EpsStar> {
        let mut f = Formulation::new(self);
        f.eps = EpsMode::Free;
        let built = f.build();
        let mut p = built.program;
        p.set_objective(Objective::Linear(LinExpr::var(built.eps)));
        eps_of(&run_lp(&p)?)
    }
}

pub(crate) fn eps_of(r: &SolveResult) -> Result<EpsStar> {
    match r.status {
        SolveStatus::Optimal => Ok(EpsStar::Optimal { value: r.objective }),
        SolveStatus::Infeasible => Ok(EpsStar::Infeasible),
        SolveStatus::Unbounded => Ok(EpsStar::Unbounded),
        other => Err(CoreError::Internal(format!("LP ended with status {other:?}"))),
    }
}

pub(crate) fn run_lp(p: &MathProgram) -> Result<SolveResult> {
    solve_lp(p).map_err(|source| CoreError::Solver { source, dump: dump_lp(p) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum EpsMode {
    Free,
    Fixed(f64),
    AtLeast(f64),
}

/// A concrete program over a system: adjustable weight bounds, extra rows,
/// skipped groups, ε handling and optional big-M relaxation.
pub(crate) struct Formulation<'a> {
    pub sys: &'a ConstraintSystem,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub extra: Vec<(String, LinearRow)>,
    pub eps: EpsMode,
    pub relax: Option<f64>,
    pub sense: Sense,
}

pub(crate) struct Built {
    pub program: MathProgram,
    pub w: Vec<Var>,
    pub eps: Var,
    /// One binary per group when relaxed, in group order.
    pub nus: Vec<Var>,
}

impl<'a> Formulation<'a> {
    pub fn new(sys: &'a ConstraintSystem) -> Self {
        let n = sys.n;
        let mut lower = vec![0.0; n * n];
        for j in 0..n {
            lower[j * n + j] = sys.eps_prime;
        }
        Self {
            sys,
            lower,
            upper: vec![f64::INFINITY; n * n],
            extra: Vec::new(),
            eps: EpsMode::Free,
            relax: None,
            sense: Sense::Maximize,
        }
    }

    pub fn bound(&mut self, i: usize, j: usize, lo: f64, hi: f64) {
        let n = self.sys.n;
        self.lower[i * n + j] = lo;
        self.upper[i * n + j] = hi;
    }

    pub fn build(&self) -> Built {
        let n = self.sys.n;
        let mut p = MathProgram::new(self.sense);
        let mut w = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                w.push(p.add_var(format!("w_{}_{}", i + 1, j + 1), self.lower[k], self.upper[k]));
            }
        }
        let (lo, hi) = match self.eps {
            EpsMode::Free => (f64::NEG_INFINITY, f64::INFINITY),
            EpsMode::Fixed(v) => (v, v),
            EpsMode::AtLeast(v) => (v, f64::INFINITY),
        };
        let eps = p.add_var("eps", lo, hi);
        for i in 0..n {
            let mut e = LinExpr::new();
            for j in 0..n {
                e.add(w[i * n + j], 1.0);
            }
            p.add_constraint(format!("row_{}", i + 1), e, Cmp::Eq, 1.0);
        }
        let expr = |r: &LinearRow| {
            let mut e = LinExpr::new();
            for t in &r.terms {
                e.add(w[t.i * n + t.j], t.coef);
            }
            if r.eps != 0.0 {
                e.add(eps, -r.eps);
            }
            e
        };
        let mut nus = Vec::new();
        for g in &self.sys.groups {
            let nu = self.relax.map(|_| p.add_binary(format!("nu_{}", g.tag)));
            for (k, r) in g.rows.iter().enumerate() {
                let mut e = expr(r);
                if let (Some(nu), Some(m)) = (nu, self.relax) {
                    e.add(nu, m.max(self.needed_m(r)));
                }
                p.add_constraint(format!("{}#{}", g.tag, k + 1), e, Cmp::Ge, r.rhs);
            }
            nus.extend(nu);
        }
        for (name, r) in &self.extra {
            p.add_constraint(name.clone(), expr(r), Cmp::Ge, r.rhs);
        }
        Built { program: p, w, eps, nus }
    }

    /// Smallest big-M that relaxes `r` everywhere on the unit box.
    fn needed_m(&self, r: &LinearRow) -> f64 {
        let eps = match self.eps {
            EpsMode::Fixed(v) | EpsMode::AtLeast(v) => v,
            EpsMode::Free => 0.0,
        };
        let min_lhs: f64 = r.terms.iter().map(|t| t.coef.min(0.0)).sum();
        r.rhs + r.eps * eps - min_lhs + 1e-6
    }

    /// Weight matrix from a solution, with round-off cleaned and rows
    /// rescaled to sum exactly to one.
    pub fn matrix(&self, built: &Built, values: &[f64]) -> Result<EmpathicMatrix> {
        let n = self.sys.n;
        let rows = (0..n)
            .map(|i| {
                let raw: Vec<f64> = (0..n)
                    .map(|j| {
                        let v = values[built.w[i * n + j].0];
                        if v.abs() < 1e-12 { 0.0 } else { v.max(0.0) }
                    })
                    .collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / s).collect()
            })
            .collect();
        EmpathicMatrix::new(MatrixKind::Local, rows)
    }
}
