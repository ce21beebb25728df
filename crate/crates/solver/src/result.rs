use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    LocalOptimum,
    IterationLimit,
}

impl SolveStatus {
    /// True when `values` hold a feasible point.
    pub fn has_point(self) -> bool {
        matches!(self, Self::Optimal | Self::LocalOptimum | Self::IterationLimit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartOrigin {
    /// LP vertex maximizing the j-th entropy argument.
    Vertex(usize),
    /// LP vertex maximizing a random Dirichlet combination.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartTrace {
    pub index: usize,
    pub origin: StartOrigin,
    pub initial: f64,
    #[serde(rename = "final")]
    pub last: f64,
    pub iterations: usize,
    pub descended: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveMeta {
    pub iterations: usize,
    pub nodes: usize,
    /// Best proven bound (MILP), in the program's own sense.
    pub bound: Option<f64>,
    /// Dual objective recovered from the final simplex basis.
    pub dual_objective: Option<f64>,
    /// Barrier duality-gap estimate at termination.
    pub gap: Option<f64>,
    pub seed: Option<u64>,
    pub starts: Vec<StartTrace>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub meta: SolveMeta,
}

impl SolveResult {
    pub(crate) fn without_point(status: SolveStatus, meta: SolveMeta) -> Self {
        let objective = match status {
            SolveStatus::Unbounded => f64::INFINITY,
            _ => f64::NAN,
        };
        Self { status, objective, values: Vec::new(), meta }
    }
}
