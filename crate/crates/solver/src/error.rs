use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("wrong solver for this program: {0}")]
    WrongObjective(&'static str),
    #[error("numerical failure: {0}")]
    Numerical(String),
}
