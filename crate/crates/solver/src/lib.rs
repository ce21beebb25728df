//! Small-scale mathematical programming: a dense two-phase simplex, binary
//! branch-and-bound, and entropy maximization/minimization over polyhedra.
//!
//! Everything is deterministic for a fixed program and seed.

mod dump;
mod entropy;
mod error;
mod milp;
mod program;
mod result;
mod simplex;
pub mod tol;

pub use dump::dump_lp;
pub use entropy::{maximize_entropy, minimize_entropy, DEFAULT_STARTS};
pub use error::SolverError;
pub use milp::{solve_milp, solve_milp_with, MilpOptions};
pub use program::{Cmp, Constraint, EntropyObjective, LinExpr, MathProgram, Objective, Sense, Var, VarKind, Variable};
pub use result::{SolveMeta, SolveResult, SolveStatus, StartOrigin, StartTrace};
pub use simplex::solve_lp;
