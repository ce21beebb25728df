//! Learning empathic networks among a panel of experts from incomplete,
//! possibly inconsistent preference and node information.
//!
//! Indices are zero-based in Rust and one-based in every serialized form.

pub mod constraints;
pub mod error;
pub mod export;
pub mod inconsistency;
mod index;
pub mod judgment;
pub mod network;
pub mod relations;
pub mod selection;
pub mod session;
pub mod welfare;

pub use constraints::{assemble, ConstraintSystem, EmpathicStatement, EpsStar, Relation, Source, StatementPayload};
pub use error::{CoreError, Result};
pub use inconsistency::{apply_resolution, enumerate_sets, min_inconsistent_set, InconsistencyReport};
pub use judgment::{
    complete, intrinsic_matrix, judgment_inconsistency, principal_eigenvector, CompletionResult, CompletionStatus,
    FuzzyJudgmentMatrix, IntrinsicStatement,
};
pub use network::{
    centrality_entropy, classify_network, empathic_centrality, global_utilities, global_weight_matrix,
    is_irreducible, local_utilities, network_density, CentralityVector, EmpathicMatrix, MatrixKind,
    NetworkDiagnostics, Thresholds, UtilityKind, UtilityMatrix,
};
pub use relations::{necessary, possible, relation_matrix, RelationClass, RelationMatrix};
pub use selection::{select, Direction, SelectionResult, TargetSpec, TreeEdge, TreeSpec};
pub use session::{Panel, Phase, Session, SessionDir, SessionState, SessionStore};
pub use welfare::{best_alternative, compare_networks, social_welfare, NetworkInput, Propagation, WelfareReport};
