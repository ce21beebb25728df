//! Solver tolerances, kept in one place.

/// Constraint satisfaction accepted for an optimal point.
pub const FEASIBILITY: f64 = 1e-7;
/// Reduced-cost and objective comparisons.
pub const OPTIMALITY: f64 = 1e-8;
/// Distance from 0/1 accepted as integral.
pub const INTEGRALITY: f64 = 1e-6;
/// Smallest magnitude accepted as a pivot element.
pub const PIVOT: f64 = 1e-9;
/// Floor applied inside entropy logarithms.
pub const LOG_FLOOR: f64 = 1e-12;
