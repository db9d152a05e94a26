use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the regime where the requested object exists,
    /// e.g. the even ground state for ω ≤ γ²/4.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sampled value was NaN or infinite.
    #[error("non-finite sample at x = {x}")]
    NonFinite { x: f64 },

    /// Two grid functions live on different grids.
    #[error("grid spec mismatch: {0}")]
    SpecMismatch(String),

    /// Mass below the low-frequency cutoff 2M(Q_{γ²/4,0}).
    #[error("mass too small: M(f) = {mass} < {cutoff}")]
    MassTooSmall { mass: f64, cutoff: f64 },

    /// A documented precondition was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative solve failed to converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// The modulation translation left its admissible domain y > 2R.
    #[error("domain violation: y = {y} fell below 2R = {limit}")]
    DomainViolation { y: f64, limit: f64 },

    /// Not enough recorded samples for a finite-difference estimate.
    #[error("insufficient samples: need {need}, have {have}")]
    InsufficientSamples { need: usize, have: usize },

    /// No branch of a threshold family matches the requested virial sign.
    #[error("no branch with requested K sign: {0}")]
    NoBranch(String),

    /// The banded linear solve failed (degenerate pivot).
    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
