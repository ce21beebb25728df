//! Empathic matrices, centralities, utilities and network diagnostics.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Absolute tolerance for invariant checks.
pub const INVARIANT_TOL: f64 = 1e-9;
/// Row-sum slack accepted from matrices printed to four decimals.
pub const PRINTED_TOL: f64 = 2e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Local,
    Global,
}

#[derive(Deserialize)]
struct MatrixJson {
    n: usize,
    kind: MatrixKind,
    rows: Vec<Vec<f64>>,
}

/// Row-stochastic nonnegative `n×n` matrix; `w_ij` is how much `i` weighs `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson")]
pub struct EmpathicMatrix {
    n: usize,
    kind: MatrixKind,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for EmpathicMatrix {
    type Error = CoreError;

    fn try_from(raw: MatrixJson) -> Result<Self> {
        if raw.rows.len() != raw.n {
            return Err(CoreError::invalid("rows", format!("expected {} rows, got {}", raw.n, raw.rows.len())));
        }
        Self::new(raw.kind, raw.rows)
    }
}

fn check_shape(rows: &[Vec<f64>]) -> Result<usize> {
    let n = rows.len();
    if n == 0 {
        return Err(CoreError::invalid("rows", "matrix is empty"));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(CoreError::invalid(format!("rows[{}]", i + 1), format!("expected {n} entries, got {}", r.len())));
        }
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::invalid(format!("rows[{}][{}]", i + 1, j + 1), "not a finite number"));
        }
    }
    Ok(n)
}

impl EmpathicMatrix {
    /// Validates nonnegativity and unit row sums within [`INVARIANT_TOL`].
    pub fn new(kind: MatrixKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = check_shape(&rows)?;
        for (i, r) in rows.iter().enumerate() {
            if let Some(j) = r.iter().position(|&v| v < -INVARIANT_TOL) {
                return Err(CoreError::invalid(format!("rows[{}][{}]", i + 1, j + 1), "negative weight"));
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > INVARIANT_TOL {
                return Err(CoreError::invalid(format!("rows[{}]", i + 1), format!("row sums to {s}, not 1")));
            }
        }
        Ok(Self { n, kind, rows })
    }

    /// Accepts matrices printed at limited precision: rows within
    /// [`PRINTED_TOL`] of unit sum are rescaled to sum exactly to one.
    pub fn from_printed(kind: MatrixKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(&rows)?;
        let rows = renormalize(rows, "rows")?;
        Self::new(kind, rows)
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self { n, kind: MatrixKind::Local, rows }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.rows[i][j])
    }

    pub fn max_row_error(&self) -> f64 {
        self.rows.iter().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn renormalize(rows: Vec<Vec<f64>>, field: &str) -> Result<Vec<Vec<f64>>> {
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > PRINTED_TOL {
                return Err(CoreError::invalid(format!("{field}[{}]", i + 1), format!("row sums to {s}")));
            }
            Ok(r.into_iter().map(|v| v / s).collect())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralityVector {
    pub omega: Vec<f64>,
}

impl CentralityVector {
    /// `ω_j / n`, a probability vector.
    pub fn normalized(&self) -> Vec<f64> {
        let n = self.omega.len() as f64;
        self.omega.iter().map(|w| w / n).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UtilityKind {
    Intrinsic,
    LocalEmpathic,
    GlobalEmpathic,
}

#[derive(Deserialize)]
struct UtilityJson {
    n: usize,
    m: usize,
    kind: UtilityKind,
    rows: Vec<Vec<f64>>,
}

/// `n×m` utilities of experts over alternatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UtilityJson")]
pub struct UtilityMatrix {
    n: usize,
    m: usize,
    kind: UtilityKind,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<UtilityJson> for UtilityMatrix {
    type Error = CoreError;

    fn try_from(raw: UtilityJson) -> Result<Self> {
        if raw.rows.len() != raw.n || raw.rows.iter().any(|r| r.len() != raw.m) {
            return Err(CoreError::invalid("rows", format!("expected a {}x{} matrix", raw.n, raw.m)));
        }
        Self::new(raw.kind, raw.rows)
    }
}

impl UtilityMatrix {
    /// Intrinsic rows must sum to one within 1e-6.
    pub fn new(kind: UtilityKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(CoreError::invalid("rows", "utility matrix is empty"));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != m {
                return Err(CoreError::invalid(format!("rows[{}]", i + 1), "ragged row"));
            }
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(CoreError::invalid(format!("rows[{}][{}]", i + 1, j + 1), "not a finite number"));
            }
            if kind == UtilityKind::Intrinsic {
                let s: f64 = r.iter().sum();
                if (s - 1.0).abs() > 1e-6 {
                    return Err(CoreError::invalid(format!("rows[{}]", i + 1), format!("intrinsic row sums to {s}")));
                }
            }
        }
        Ok(Self { n, m, kind, rows })
    }

    /// Like [`EmpathicMatrix::from_printed`], rescaling intrinsic rows.
    pub fn from_printed(kind: UtilityKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        let rows = if kind == UtilityKind::Intrinsic { renormalize(rows, "rows")? } else { rows };
        Self::new(kind, rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> UtilityKind {
        self.kind
    }

    pub fn get(&self, j: usize, s: usize) -> f64 {
        self.rows[j][s]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Analysis thresholds. `big_m = None` means the default `2n + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "defaults::eps_prime")]
    pub eps_prime: f64,
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    #[serde(default = "defaults::rho0")]
    pub rho0: f64,
    #[serde(default = "defaults::eps_min")]
    pub eps_min: f64,
    #[serde(default)]
    pub big_m: Option<f64>,
}

mod defaults {
    pub fn eps_prime() -> f64 {
        0.01
    }
    pub fn delta() -> f64 {
        0.015
    }
    pub fn rho0() -> f64 {
        0.9
    }
    pub fn eps_min() -> f64 {
        1e-4
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            eps_prime: defaults::eps_prime(),
            delta: defaults::delta(),
            rho0: defaults::rho0(),
            eps_min: defaults::eps_min(),
            big_m: None,
        }
    }
}

impl Thresholds {
    pub fn big_m(&self, n: usize) -> f64 {
        self.big_m.unwrap_or(2.0 * n as f64 + 1.0)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let named = [
            ("eps_prime", self.eps_prime),
            ("delta", self.delta),
            ("rho0", self.rho0),
            ("eps_min", self.eps_min),
            ("big_m", self.big_m(n)),
        ];
        for (field, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(CoreError::invalid(format!("thresholds.{field}"), "must be finite and positive"));
            }
        }
        if n > 0 && self.eps_prime >= 1.0 / n as f64 {
            return Err(CoreError::invalid("thresholds.eps_prime", format!("must be below 1/n = {}", 1.0 / n as f64)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkDiagnostics {
    pub centralities: Vec<f64>,
    pub density: f64,
    pub entropy: f64,
    /// Some centrality was zero and entered the entropy as `g(0) = 0`.
    pub zero_centrality: bool,
    pub is_central: bool,
    pub is_distributed: bool,
    pub is_highly_resilient: bool,
    pub is_irreducible: bool,
}

/// Column sums `ω_j = Σ_k w_kj`.
pub fn empathic_centrality(w: &EmpathicMatrix) -> CentralityVector {
    let omega = (0..w.n).map(|j| w.rows.iter().map(|r| r[j]).sum()).collect();
    CentralityVector { omega }
}

fn mix(w: &EmpathicMatrix, u: &UtilityMatrix, kind: UtilityKind) -> Result<UtilityMatrix> {
    if w.n != u.n {
        return Err(CoreError::Dimension(format!("network has {} nodes, utilities {} rows", w.n, u.n)));
    }
    let rows = (0..w.n)
        .map(|i| (0..u.m).map(|s| (0..w.n).map(|k| w.rows[i][k] * u.rows[k][s]).sum()).collect())
        .collect();
    Ok(UtilityMatrix { n: u.n, m: u.m, kind, rows })
}

/// `U = W U^I`.
pub fn local_utilities(w: &EmpathicMatrix, u: &UtilityMatrix) -> Result<UtilityMatrix> {
    if w.kind != MatrixKind::Local {
        return Err(CoreError::Precondition("local utilities need a local matrix".into()));
    }
    mix(w, u, UtilityKind::LocalEmpathic)
}

/// `G = (I - W + D)^{-1} D` with `D = diag(W)`.
pub fn global_weight_matrix(w: &EmpathicMatrix) -> Result<EmpathicMatrix> {
    if w.kind != MatrixKind::Local {
        return Err(CoreError::Precondition("global weights need a local matrix".into()));
    }
    if let Some(j) = (0..w.n).find(|&j| w.rows[j][j] <= 0.0) {
        return Err(CoreError::Precondition(format!("diagonal entry w({0},{0}) is not positive", j + 1)));
    }
    let n = w.n;
    let wm = w.to_dmatrix();
    let d = DMatrix::from_diagonal(&wm.diagonal());
    let a = DMatrix::identity(n, n) - &wm + &d;
    let g = a.lu().solve(&d).ok_or_else(|| CoreError::Internal("I - W + D is singular".into()))?;
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| g[(i, j)]).collect()).collect();
    EmpathicMatrix::new(MatrixKind::Global, rows)
}

/// `U = G U^I`.
pub fn global_utilities(w: &EmpathicMatrix, u: &UtilityMatrix) -> Result<UtilityMatrix> {
    mix(&global_weight_matrix(w)?, u, UtilityKind::GlobalEmpathic)
}

/// Utilities under a matrix of either kind: local matrices mix once,
/// global matrices are applied as given.
pub fn utilities_under(w: &EmpathicMatrix, u: &UtilityMatrix) -> Result<UtilityMatrix> {
    match w.kind {
        MatrixKind::Local => mix(w, u, UtilityKind::LocalEmpathic),
        MatrixKind::Global => mix(w, u, UtilityKind::GlobalEmpathic),
    }
}

/// `-Σ ω'_j ln ω'_j` with `ω' = ω/n` and `0 ln 0 = 0`.
pub fn centrality_entropy(w: &EmpathicMatrix) -> f64 {
    entropy_of(&empathic_centrality(w).normalized())
}

pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

/// Fraction of off-diagonal entries with `w_ij >= ε'`.
pub fn network_density(w: &EmpathicMatrix, eps_prime: f64) -> Result<f64> {
    if w.n < 2 {
        return Err(CoreError::Precondition("density needs at least two nodes".into()));
    }
    let arcs = arcs(w, eps_prime).count();
    Ok(arcs as f64 / (w.n * (w.n - 1)) as f64)
}

fn arcs(w: &EmpathicMatrix, eps_prime: f64) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..w.n).flat_map(move |i| (0..w.n).filter(move |&j| j != i && w.rows[i][j] >= eps_prime).map(move |j| (i, j)))
}

/// Strong connectivity of the arcs `w_ij >= ε'` (self-loops ignored).
pub fn is_irreducible(w: &EmpathicMatrix, eps_prime: f64) -> bool {
    let n = w.n;
    let mut fwd = vec![Vec::new(); n];
    let mut back = vec![Vec::new(); n];
    for (i, j) in arcs(w, eps_prime) {
        fwd[i].push(j);
        back[j].push(i);
    }
    let reaches_all = |adj: &[Vec<usize>]| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n <= 1 || (reaches_all(&fwd) && reaches_all(&back))
}

pub fn classify_network(w: &EmpathicMatrix, t: &Thresholds) -> NetworkDiagnostics {
    let c = empathic_centrality(w);
    let n = w.n as f64;
    let density = if w.n >= 2 { network_density(w, t.eps_prime).unwrap_or(0.0) } else { 0.0 };
    let is_distributed = c.omega.iter().all(|o| (o - 1.0).abs() <= t.delta);
    NetworkDiagnostics {
        density,
        entropy: entropy_of(&c.normalized()),
        zero_centrality: c.omega.iter().any(|&o| o <= 0.0),
        is_central: c.omega.iter().any(|&o| o >= n / 2.0),
        is_distributed,
        is_highly_resilient: density >= t.rho0 && is_distributed,
        is_irreducible: is_irreducible(w, t.eps_prime),
        centralities: c.omega,
    }
}
