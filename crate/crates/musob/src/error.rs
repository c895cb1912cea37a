use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("path is not mu-admissible: {0}")]
    GammaMuViolation(String),

    #[error("path leaves the grid near {point:?}")]
    OutOfDomain { point: Vec<f64> },

    #[error("constraint row {row} is structurally infeasible")]
    Infeasible { row: usize },

    #[error(
        "solver did not converge after {iterations} iterations \
         (violation {max_violation:.3e}, gap {duality_gap:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        max_violation: f64,
        duality_gap: f64,
        /// Best iterate found before giving up.
        best_g: Vec<f64>,
        best_value: f64,
    },

    #[error("witness is not admissible at level {required}: path {path} has mass {mass}")]
    WitnessInvalid { path: usize, mass: f64, required: f64 },

    #[error("threshold {k} leaves no regular cells; increase k")]
    AllExceptional { k: f64 },

    #[error("seed values {i} and {j} are not Holder-compatible at the given constant")]
    HolderIncompatible { i: usize, j: usize },

    #[error("points {i} and {j} coincide but carry different function values")]
    CoincidentPoints { i: usize, j: usize },

    #[error("region cannot contain any slope-{k} polygonal path")]
    RegionTooThin { k: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureDivergence(String),
}
