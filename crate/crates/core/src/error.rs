use thiserror::Error;

/// Errors produced by the spectral discretizations and their solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {x} lies outside [-1, 1]")]
    Domain { x: f64 },

    #[error("no resolution reached: {0}")]
    ResolutionFailure(String),

    #[error("truncation size {n} too small: {reason}")]
    InvalidTruncation { n: usize, reason: String },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("ill-posed constraints: the m x m constraint/monomial matrix is singular (condition estimate {cond:.3e})")]
    IllPosedConstraints { cond: f64 },

    #[error("singular system: |R[{index},{index}]| = {pivot:.3e} below threshold {threshold:.3e}")]
    SingularSystem {
        index: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("iterative solver broke down at iteration {iteration}: {reason}")]
    SolverBreakdown { iteration: usize, reason: String },

    #[error("iterative solver did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("size {n} exceeds the dense budget of {limit}")]
    Budget { n: usize, limit: usize },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = SpectralError> = std::result::Result<T, E>;
