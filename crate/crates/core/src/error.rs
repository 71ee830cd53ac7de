use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("channel count mismatch: expected {expected}, found {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator has non-finite entries")]
    NonFinite,

    #[error("negative propagation time {0} (semigroups only run forward)")]
    NegativeTime(f64),

    /// The fast generator is not (well-)invertible on the complement of the
    /// slow subspace.
    #[error("singular fast dynamics: condition number {condition:e} exceeds limit {limit:e}")]
    SingularFastDynamics { condition: f64, limit: f64 },

    #[error("structural violation: {0}")]
    StructuralViolation(String),

    #[error("preconditions failed: {}", .0.failing_names().join(", "))]
    PreconditionFailed(Box<ValidationReport>),

    #[error("supplied inverse does not invert its operator (residual {residual:e})")]
    InverseMismatch { residual: f64 },

    #[error("time-domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("truncation study requires identity scattering (N_ij = delta_ij); deviation {0:e}")]
    NonIdentityScattering(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
