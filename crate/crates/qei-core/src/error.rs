use thiserror::Error;

/// Errors shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A quantity that must be summed or integrated fails its decay test.
    /// The message names the test that fired.
    #[error("divergence detected: {0}")]
    DivergenceDetected(String),

    /// The quadrature budget was exhausted before the requested tolerance
    /// was met.
    #[error("failed to converge: {0}")]
    NonConvergence(String),

    /// A sampling grid is too coarse for the weight it is supposed to
    /// resolve.
    #[error("grid cannot resolve the weight: {0}")]
    ResolutionError(String),

    /// Scale factors must be strictly positive.
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),

    /// A massless theory has no zero-momentum mode; raise the momentum floor
    /// or use a positive mass.
    #[error("k = 0 mode requested with m = 0; raise k_min or set m > 0")]
    MasslessZeroMode,

    /// A fit or other operation needs more input points than were supplied.
    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    /// Two objects that must describe the same physical setup do not.
    #[error("mismatched inputs: {0}")]
    MismatchedInputs(String),

    /// A configuration value is out of range or malformed.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
