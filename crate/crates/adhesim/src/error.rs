//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdhesimError {
    /// Scene definition is malformed beyond what a validation report covers
    /// (non-evaluable obstacle/adhesion, inverted domain, ...).
    #[error("scene configuration error: {0}")]
    SceneConfig(String),

    /// A profile violates the constraints required by an evaluator.
    #[error("inadmissible profile: {0}")]
    InadmissibleProfile(String),

    /// Too few grid nodes for the requested stencil or solve.
    #[error("instance error: {0}")]
    Instance(String),

    /// Degenerate geometry (coincident curve endpoints, empty layer, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The glued recovery curve cannot be represented as an admissible graph
    /// at this epsilon. Carries the offending corner and the epsilon range
    /// for which the construction is expected to work.
    #[error(
        "recovery construction failed at free-boundary point x = {corner:.6}: {reason} \
         (construction admissible for eps <= {eps_max:.3e})"
    )]
    RecoveryGeometry {
        corner: f64,
        reason: String,
        eps_max: f64,
    },

    /// A solver signalled a failure it could not recover from.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Configuration file / CLI parameter problems.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AdhesimError>;
