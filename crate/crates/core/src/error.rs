use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("critical realization: {0}")]
    CriticalRealization(String),

    #[error("unresolved winding: phase increments still exceed pi/2 at {samples} samples")]
    UnresolvedWinding { samples: usize },

    #[error("no localized edge mode for |w| <= |u| (u = {u}, w = {w})")]
    NoEdgeMode { u: f64, w: f64 },

    #[error("gapless Bloch Hamiltonian at |u| = |w| = {0}")]
    Gapless(f64),

    #[error("density not normalized: integral = {integral}")]
    NotNormalized { integral: f64 },

    #[error("quadrature tolerance {tolerance:e} not reached: estimate {estimate}, error {error:e}")]
    QuadratureTolerance {
        tolerance: f64,
        estimate: f64,
        error: f64,
    },

    #[error("eigensolver failed to converge after {iterations} iterations (index {index})")]
    NoConvergence { iterations: usize, index: usize },

    #[error("inverse iteration stagnated: residual {residual:e}")]
    InverseIteration { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
