//! Dimension reduction for finite point sets in `l_p`, `0 < p < 2`.
//!
//! Any `k` points of `l_p^m` are mapped to `k` points of `l_p^n` by keeping a
//! weighted subset of the original coordinates. The reduction is built in
//! three layers:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`snowflake`] | finite trigonometric helix `phi: R -> R^s` with `‖phi(x) - phi(y)‖ ≈ |x - y|^{p/2}` |
//! | [`sparsifier`] | deterministic barrier-potential spectral sparsification of `sum v_i v_i^T` |
//! | [`subspace`] | one weighted coordinate set preserving norms on several subspaces at once |
//! | [`pipeline`] | lifts coordinates through the helix, selects coordinates, audits distortion |
//!
//! The certified two-sided factor on `p`-th powers of distances is
//! `F = (1 + eps_snow)^4 * sqrt(kappa)`, where `kappa` is the condition ratio
//! achieved by the sparsifier.
//!
//! ```no_run
//! use lpembed_core::{reduce_lp, measure_distortion, LpPointSet, ReductionConfig};
//!
//! let points = LpPointSet::new(1.0, vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.0]])?;
//! let config = ReductionConfig::split(0.1, 9.0)?;
//! let reduced = reduce_lp(&points, &config)?;
//! let report = measure_distortion(&points, &reduced)?;
//! assert!(report.spread() <= reduced.certified_factor.powf(2.0 / points.p()) * (1.0 + 1e-9));
//! # Ok::<(), lpembed_core::Error>(())
//! ```

pub mod error;
mod linalg;
pub mod pipeline;
pub mod snowflake;
pub mod sparsifier;
pub mod subspace;

pub use error::{Error, Result};
pub use linalg::EigenBounds;
pub use pipeline::{
    construction_bound, measure_distortion, predicted_n, reduce_lp, reduce_lp_timed,
    DistortionReport, EpsilonBudget, LpPointSet, Normalization, RangePolicy, ReducedPointSet,
    ReductionConfig, SizeBound, StageTimings,
};
pub use snowflake::{helix_constant, SnowflakeAudit, SnowflakeMap, SnowflakeSummary};
pub use sparsifier::{
    bss_sparsify, condition_bound, d_for_eps, support_budget, verify_sandwich, BarrierStep,
    SparseWeights, Sparsifier, VectorFamily,
};
pub use subspace::{
    orthonormal_basis, simultaneous_sparsify, verify_selection, CoordinateSelection, SubspaceFamily,
};
