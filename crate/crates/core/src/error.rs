use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Every vector of the family is zero, so there is nothing to sparsify.
    #[error("vector family spans only the zero vector")]
    ZeroFamily,

    #[error("subspace {index} has no vector above the rank threshold")]
    EmptySubspace { index: usize },

    /// Refinement reached the frequency cap without meeting the audit target.
    #[error(
        "snowflake construction failed with {frequencies} frequencies: \
         best audited ratios [{min_ratio}, {max_ratio}] exceed target 1 +/- {eps}"
    )]
    SnowflakeConstruction {
        frequencies: usize,
        min_ratio: f64,
        max_ratio: f64,
        eps: f64,
    },

    /// The barrier invariants no longer hold. Only reachable through
    /// floating-point breakdown.
    #[error(
        "barrier breakdown at step {step} (lower {lower}, upper {upper}, \
         eigenvalues [{eig_min}, {eig_max}]): {detail}"
    )]
    BarrierBreakdown {
        step: usize,
        lower: f64,
        upper: f64,
        eig_min: f64,
        eig_max: f64,
        detail: String,
    },

    #[error("no admissible vector at step {step} (lower {lower}, upper {upper})")]
    NoAdmissibleVector { step: usize, lower: f64, upper: f64 },

    #[error("symmetric eigendecomposition did not converge")]
    EigenNoConvergence,
}

impl Error {
    /// `true` for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::DimensionMismatch(_)
                | Error::ZeroFamily
                | Error::EmptySubspace { .. }
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
