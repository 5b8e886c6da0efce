//! Versioned JSON documents written by the subcommands.

use std::path::Path;

use lpembed_core::{
    DistortionReport, EpsilonBudget, Normalization, RangePolicy, ReducedPointSet, ReductionConfig,
    SnowflakeAudit, SnowflakeSummary, StageTimings,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

pub fn version_string() -> String {
    format!("lpembed {}", env!("CARGO_PKG_VERSION"))
}

/// Wraps a document with a `schema_version` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Versioned<T> {
    pub fn new(body: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            body,
        }
    }
}

/// Flags of a `reduce` run together with the resolved budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: Option<String>,
    pub p: f64,
    pub budget: EpsilonBudget,
    pub eps_snow: f64,
    pub d_bss: f64,
    pub normalization: Normalization,
    pub range: RangePolicy,
    pub basis_tol: f64,
    pub rank_tol: f64,
}

impl ConfigEcho {
    pub fn new(
        input: Option<&Path>,
        p: f64,
        config: &ReductionConfig,
        eps_snow: f64,
        d_bss: f64,
    ) -> Self {
        Self {
            input: input.map(|p| p.display().to_string()),
            p,
            budget: config.budget,
            eps_snow,
            d_bss,
            normalization: config.normalization,
            range: config.range,
            basis_tol: config.basis_tol,
            rank_tol: config.rank_tol,
        }
    }
}

/// Wall-clock milliseconds per stage. Excluded from determinism checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub snowflake_ms: f64,
    pub basis_ms: f64,
    pub sparsify_ms: f64,
    pub emit_ms: f64,
    pub audit_ms: f64,
    pub total_ms: f64,
}

impl Timings {
    pub fn from_stages(stages: StageTimings, audit_ms: f64, total_ms: f64) -> Self {
        Self {
            snowflake_ms: stages.snowflake_ms,
            basis_ms: stages.basis_ms,
            sparsify_ms: stages.sparsify_ms,
            emit_ms: stages.emit_ms,
            audit_ms,
            total_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub version: String,
    pub config: ConfigEcho,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub sigma: Vec<usize>,
    pub weights: Vec<f64>,
    pub normalization_scale: f64,
    pub distortion: DistortionReport,
    /// `F` on `p`-th powers.
    pub certified_factor: f64,
    /// `F^{1/p}` on distances.
    pub certified_distance_factor: f64,
    pub kappa: f64,
    pub rank: usize,
    pub subspace_total_dim: usize,
    pub support_bound: usize,
    pub snowflake: Option<SnowflakeSummary>,
    pub snowflake_audit: Option<SnowflakeAudit>,
    pub degenerate: bool,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(
        config: ConfigEcho,
        m: usize,
        reduced: &ReducedPointSet,
        distortion: DistortionReport,
        timings: Timings,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            version: version_string(),
            config,
            k: reduced.k,
            m,
            n: reduced.n,
            sigma: reduced.sigma.clone(),
            weights: reduced.weights.clone(),
            normalization_scale: reduced.normalization_scale,
            distortion,
            certified_factor: reduced.certified_factor,
            certified_distance_factor: reduced.certified_distance_factor(),
            kappa: reduced.kappa,
            rank: reduced.rank,
            subspace_total_dim: reduced.subspace_total_dim,
            support_bound: reduced.support_bound,
            snowflake: reduced.snowflake.clone(),
            snowflake_audit: reduced.snowflake_audit,
            degenerate: reduced.degenerate,
            timings,
        }
    }
}

/// Parses a JSON document and drops its top-level `timings` block.
pub fn strip_timings(json: &str) -> serde_json::Result<serde_json::Value> {
    let mut value: serde_json::Value = serde_json::from_str(json)?;
    if let Some(map) = value.as_object_mut() {
        map.remove("timings");
    }
    Ok(value)
}

/// `true` if every number in the document is finite. Non-finite floats
/// serialize as `null`, so those are rejected as well.
pub fn all_finite(value: &serde_json::Value) -> bool {
    use serde_json::Value;
    match value {
        Value::Number(n) => n.as_f64().is_some_and(f64::is_finite),
        Value::Array(items) => items.iter().all(all_finite),
        Value::Object(map) => map.iter().all(|(key, v)| {
            // Optional fields are the only legitimate nulls.
            (v.is_null() && OPTIONAL_FIELDS.contains(&key.as_str())) || all_finite(v)
        }),
        Value::Null => false,
        Value::Bool(_) | Value::String(_) => true,
    }
}

const OPTIONAL_FIELDS: &[&str] = &[
    "input",
    "snowflake",
    "snowflake_audit",
    "min_pair",
    "max_pair",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportEntry {
    pub index: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lower: f64,
    pub upper: f64,
    pub slack: f64,
    pub contained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsifyReport {
    pub schema_version: u32,
    pub d: f64,
    pub rank: usize,
    pub support: Vec<SupportEntry>,
    pub kappa: f64,
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub summary: SnowflakeSummary,
    pub audit: SnowflakeAudit,
    pub within_target: bool,
}

/// One line of the `bench` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub k: usize,
    pub s: usize,
    pub n_bound: usize,
    pub n_actual: usize,
    /// `max_ratio / min_ratio` on distances.
    pub measured_distortion: f64,
    /// `F^{2/p}`, the certified ceiling for `measured_distortion`.
    pub certified_distortion: f64,
    pub runtime_ms: f64,
}
