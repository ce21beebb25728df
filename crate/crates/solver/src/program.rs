use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::tol;

/// Handle to a variable declared on a [`MathProgram`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

/// Affine expression `constant + Σ coef·var`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(Var, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn term(mut self, v: Var, coef: f64) -> Self {
        self.add(v, coef);
        self
    }

    pub fn add(&mut self, v: Var, coef: f64) {
        if coef != 0.0 {
            self.terms.push((v, coef));
        }
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) {
        for &(v, c) in &other.terms {
            self.add(v, c * scale);
        }
        self.constant += other.constant * scale;
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(v, c)| acc + c * x[v.0])
    }

    /// Dense coefficient vector of length `nvars` (duplicates summed).
    pub fn dense(&self, nvars: usize) -> Vec<f64> {
        let mut out = vec![0.0; nvars];
        for &(v, c) in &self.terms {
            out[v.0] += c;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinExpr,
    pub cmp: Cmp,
    pub rhs: f64,
}

impl Constraint {
    /// Signed violation; zero when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.expr.eval(x);
        match self.cmp {
            Cmp::Le => (lhs - self.rhs).max(0.0),
            Cmp::Ge => (self.rhs - lhs).max(0.0),
            Cmp::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `Σ_j φ(ℓ_j(x))` with `φ(y) = -(y/scale)·ln(y/scale)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyObjective {
    pub args: Vec<LinExpr>,
    pub scale: f64,
}

impl EntropyObjective {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.args.iter().map(|a| phi(a.eval(x), self.scale)).sum()
    }

    /// Gradient with respect to every program variable.
    pub fn gradient(&self, x: &[f64], nvars: usize) -> Vec<f64> {
        let mut g = vec![0.0; nvars];
        for a in &self.args {
            let d = dphi(a.eval(x), self.scale);
            for &(v, c) in &a.terms {
                g[v.0] += c * d;
            }
        }
        g
    }
}

pub(crate) fn phi(y: f64, scale: f64) -> f64 {
    let p = y / scale;
    if p <= 0.0 {
        return 0.0;
    }
    -p * p.max(tol::LOG_FLOOR).ln()
}

pub(crate) fn dphi(y: f64, scale: f64) -> f64 {
    let p = (y / scale).max(tol::LOG_FLOOR);
    -(p.ln() + 1.0) / scale
}

#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    Linear(LinExpr),
    Entropy(EntropyObjective),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MathProgram {
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
    pub sense: Sense,
}

impl MathProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Objective::Linear(LinExpr::new()),
            sense,
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Var {
        self.vars.push(Variable { name: name.into(), lower, upper, kind: VarKind::Continuous });
        Var(self.vars.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Var {
        self.vars.push(Variable { name: name.into(), lower: 0.0, upper: 1.0, kind: VarKind::Binary });
        Var(self.vars.len() - 1)
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, expr: LinExpr, cmp: Cmp, rhs: f64) {
        self.constraints.push(Constraint { name: name.into(), expr, cmp, rhs });
    }

    pub fn set_objective(&mut self, objective: Objective) {
        self.objective = objective;
    }

    pub fn has_binaries(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        match &self.objective {
            Objective::Linear(e) => e.eval(x),
            Objective::Entropy(e) => e.value(x),
        }
    }

    /// Checks references, bounds and coefficient finiteness.
    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.vars.len();
        let check_expr = |e: &LinExpr, ctx: &str| -> Result<(), SolverError> {
            if !e.constant.is_finite() {
                return Err(SolverError::InvalidProgram(format!("{ctx}: non-finite constant")));
            }
            for &(v, c) in &e.terms {
                if v.0 >= n {
                    return Err(SolverError::InvalidProgram(format!("{ctx}: unknown variable #{}", v.0)));
                }
                if !c.is_finite() {
                    return Err(SolverError::InvalidProgram(format!("{ctx}: non-finite coefficient")));
                }
            }
            Ok(())
        };
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(SolverError::InvalidProgram(format!("variable {}: bad bounds", v.name)));
            }
        }
        for c in &self.constraints {
            check_expr(&c.expr, &c.name)?;
            if !c.rhs.is_finite() {
                return Err(SolverError::InvalidProgram(format!("{}: non-finite rhs", c.name)));
            }
        }
        match &self.objective {
            Objective::Linear(e) => check_expr(e, "objective"),
            Objective::Entropy(e) => {
                if !(e.scale > 0.0) {
                    return Err(SolverError::InvalidProgram("entropy scale must be positive".into()));
                }
                e.args.iter().try_for_each(|a| check_expr(a, "entropy argument"))
            }
        }
    }

    /// Largest violation over bounds, integrality and constraints, with its location.
    pub fn max_violation(&self, x: &[f64]) -> (f64, String) {
        let mut worst = (0.0, String::new());
        for (v, &xi) in self.vars.iter().zip(x) {
            let mut viol = (v.lower - xi).max(xi - v.upper).max(0.0);
            if v.kind == VarKind::Binary {
                viol = viol.max((xi - xi.round()).abs());
            }
            if viol > worst.0 {
                worst = (viol, v.name.clone());
            }
        }
        for c in &self.constraints {
            let viol = c.violation(x);
            if viol > worst.0 {
                worst = (viol, c.name.clone());
            }
        }
        worst
    }

    pub fn is_feasible(&self, x: &[f64], tolerance: f64) -> bool {
        x.len() == self.vars.len() && self.max_violation(x).0 <= tolerance
    }
}
