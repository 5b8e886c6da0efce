//! End-to-end reduction of `k` points in `l_p^m` to `k` points in `l_p^n`.
//!
//! 1. Every coordinate value is lifted through a [`SnowflakeMap`] with
//!    `rho = p / 2`, so `|a - b|^p ≈ ‖phi(a) - phi(b)‖^2`.
//! 2. For each helix coordinate `l`, `X_l ⊂ R^m` is spanned by the `k`
//!    vectors `(phi_l(z_j(1)), ..., phi_l(z_j(m)))`.
//! 3. One weighted coordinate set `sigma` preserves all `X_l` at once.
//! 4. Output points are `w_u(i) = s_i^{1/p} z_u(i)` for `i` in `sigma`.
//!
//! On `p`-th powers of distances the result is certified within `[1/F, F]`
//! with `F = (1 + eps_snow)^4 * sqrt(kappa)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::snowflake::{SnowflakeAudit, SnowflakeMap, SnowflakeSummary, AUDIT_SAMPLES};
use crate::sparsifier::{d_for_eps, support_budget, Sparsifier, DEFAULT_RANK_TOL};
use crate::subspace::{simultaneous_sparsify_with, SubspaceFamily, DEFAULT_BASIS_TOL};

/// `k` points of `R^m` measured in `l_p`, `0 < p < 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpPointSet {
    p: f64,
    dim: usize,
    points: Vec<Vec<f64>>,
}

fn validate_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 2.0) {
        return Err(invalid(format!(
            "p must lie in the open interval (0, 2), got {p}"
        )));
    }
    Ok(())
}

impl LpPointSet {
    pub fn new(p: f64, points: Vec<Vec<f64>>) -> Result<Self> {
        validate_p(p)?;
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| invalid("point set must contain at least one point"))?;
        if dim == 0 {
            return Err(invalid("points must have at least one coordinate"));
        }
        for (j, z) in points.iter().enumerate() {
            if z.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "point {j} has {} coordinates, expected {dim}",
                    z.len()
                )));
            }
            if z.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("point {j} has a non-finite coordinate")));
            }
        }
        Ok(Self { p, dim, points })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Point count `k`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ambient dimension `m`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// `‖z_u - z_v‖_p^p`.
    pub fn power_distance(&self, u: usize, v: usize) -> f64 {
        power_distance(&self.points[u], &self.points[v], self.p)
    }

    /// Smallest and largest nonzero `|z_u(i) - z_v(i)|` over all pairs and
    /// coordinates; `None` if all points coincide.
    pub fn difference_range(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..self.dim {
            let mut column: Vec<f64> = self.points.iter().map(|z| z[i]).collect();
            column.sort_by(f64::total_cmp);
            column.dedup();
            if column.len() < 2 {
                continue;
            }
            // Smallest gap is between sorted neighbours, largest spans the ends.
            for w in column.windows(2) {
                lo = lo.min(w[1] - w[0]);
            }
            hi = hi.max(column[column.len() - 1] - column[0]);
        }
        (hi > 0.0).then_some((lo, hi))
    }
}

fn power_distance(a: &[f64], b: &[f64], p: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum()
}

/// How the total error budget is split between the helix and the sparsifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EpsilonBudget {
    /// Single target on distances: `(1 + e)^{6/p} = 1 + eps_total`, with
    /// `eps_snow = e` and `d_bss = d_for_eps(e)`.
    Total { eps_total: f64 },
    /// Independent knobs.
    Split { eps_snow: f64, d_bss: f64 },
}

impl EpsilonBudget {
    /// `(eps_snow, d_bss)` for exponent `p`.
    pub fn resolve(&self, p: f64) -> Result<(f64, f64)> {
        validate_p(p)?;
        match *self {
            EpsilonBudget::Total { eps_total } => {
                if !(eps_total > 0.0 && eps_total.is_finite()) {
                    return Err(invalid(format!("eps must be positive, got {eps_total}")));
                }
                let e = (1.0 + eps_total).powf(p / 6.0) - 1.0;
                Ok((e, d_for_eps(e)?))
            }
            EpsilonBudget::Split { eps_snow, d_bss } => {
                if !(eps_snow > 0.0 && eps_snow.is_finite()) {
                    return Err(invalid(format!(
                        "eps_snow must be positive, got {eps_snow}"
                    )));
                }
                if !(d_bss > 1.0 && d_bss.is_finite()) {
                    return Err(invalid(format!("d_bss must be > 1, got {d_bss}")));
                }
                Ok((eps_snow, d_bss))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Scale so that the measured largest and smallest distance ratios are
    /// reciprocal.
    #[default]
    Balanced,
    /// Scale so that the certified lower bound on distance ratios equals 1.
    Certified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum RangePolicy {
    /// Range of nonzero coordinate differences in the data.
    #[default]
    Auto,
    /// Fixed range; must contain every nonzero coordinate difference.
    Explicit { u_min: f64, u_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub budget: EpsilonBudget,
    pub normalization: Normalization,
    pub range: RangePolicy,
    pub basis_tol: f64,
    pub rank_tol: f64,
}

impl ReductionConfig {
    pub fn total(eps_total: f64) -> Result<Self> {
        Self::from_budget(EpsilonBudget::Total { eps_total })
    }

    pub fn split(eps_snow: f64, d_bss: f64) -> Result<Self> {
        Self::from_budget(EpsilonBudget::Split { eps_snow, d_bss })
    }

    fn from_budget(budget: EpsilonBudget) -> Result<Self> {
        let config = Self {
            budget,
            normalization: Normalization::default(),
            range: RangePolicy::default(),
            basis_tol: DEFAULT_BASIS_TOL,
            rank_tol: DEFAULT_RANK_TOL,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn with_range(mut self, range: RangePolicy) -> Self {
        self.range = range;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.budget {
            EpsilonBudget::Total { eps_total } if !(eps_total > 0.0 && eps_total.is_finite()) => {
                return Err(invalid(format!("eps must be positive, got {eps_total}")));
            }
            EpsilonBudget::Split { eps_snow, d_bss } => {
                EpsilonBudget::Split { eps_snow, d_bss }.resolve(1.0)?;
            }
            _ => {}
        }
        if let RangePolicy::Explicit { u_min, u_max } = self.range {
            if !(u_min > 0.0 && u_min < u_max && u_max.is_finite()) {
                return Err(invalid(format!(
                    "explicit range must satisfy 0 < u_min < u_max, got [{u_min}, {u_max}]"
                )));
            }
        }
        for (name, tol) in [("basis_tol", self.basis_tol), ("rank_tol", self.rank_tol)] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(invalid(format!("{name} must lie in (0, 1), got {tol}")));
            }
        }
        Ok(())
    }
}

/// `k` points in `l_p^n` obtained by weighted coordinate restriction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedPointSet {
    pub p: f64,
    pub k: usize,
    /// Number of kept coordinates, `|sigma|`.
    pub n: usize,
    /// Kept coordinates of the input, sorted, 0-based.
    pub sigma: Vec<usize>,
    /// Coordinate weights `s_i`, aligned with `sigma`.
    pub weights: Vec<f64>,
    /// `w_u(i) = c * s_i^{1/p} z_u(i)` with `c = normalization_scale`.
    pub points: Vec<Vec<f64>>,
    pub normalization: Normalization,
    pub normalization_scale: f64,
    /// Two-sided factor `F` on `p`-th-power distance ratios before normalization.
    pub certified_factor: f64,
    pub eps_snow: f64,
    pub d_bss: f64,
    pub kappa: f64,
    /// Rank of the concatenated coordinate Gram matrix.
    pub rank: usize,
    /// `sum_l k_l` over the helix coordinate subspaces.
    pub subspace_total_dim: usize,
    /// Construction bound `ceil(d_bss * sum_l k_l)` on `n`.
    pub support_bound: usize,
    pub snowflake: Option<SnowflakeSummary>,
    pub snowflake_audit: Option<SnowflakeAudit>,
    /// Set when all input points coincide.
    pub degenerate: bool,
}

impl ReducedPointSet {
    /// `‖w_u - w_v‖_p^p` with the normalization removed.
    pub fn unnormalized_power_distance(&self, u: usize, v: usize) -> f64 {
        power_distance(&self.points[u], &self.points[v], self.p)
            / self.normalization_scale.powf(self.p)
    }

    /// `sum_{i in sigma} s_i |z_u(i) - z_v(i)|^p` from the original points.
    pub fn weighted_power_distance(&self, original: &LpPointSet, u: usize, v: usize) -> f64 {
        let (a, b) = (&original.points[u], &original.points[v]);
        self.sigma
            .iter()
            .zip(&self.weights)
            .map(|(&i, &s)| s * (a[i] - b[i]).abs().powf(self.p))
            .sum()
    }

    /// `F^{1/p}`, the per-side bound on distance ratios.
    pub fn certified_distance_factor(&self) -> f64 {
        self.certified_factor.powf(1.0 / self.p)
    }
}

/// Wall-clock time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub snowflake_ms: f64,
    pub basis_ms: f64,
    pub sparsify_ms: f64,
    pub emit_ms: f64,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn reduce_lp(points: &LpPointSet, config: &ReductionConfig) -> Result<ReducedPointSet> {
    reduce_lp_timed(points, config).map(|(r, _)| r)
}

pub fn reduce_lp_timed(
    points: &LpPointSet,
    config: &ReductionConfig,
) -> Result<(ReducedPointSet, StageTimings)> {
    config.validate()?;
    let p = points.p();
    let (eps_snow, d_bss) = config.budget.resolve(p)?;
    let mut timings = StageTimings::default();

    let Some(data_range) = points.difference_range() else {
        return Ok((degenerate(points, config, eps_snow, d_bss), timings));
    };
    let (u_min, u_max) = match config.range {
        RangePolicy::Auto => data_range,
        RangePolicy::Explicit { u_min, u_max } => {
            if data_range.0 < u_min || data_range.1 > u_max {
                return Err(invalid(format!(
                    "explicit range [{u_min}, {u_max}] does not cover coordinate differences [{}, {}]",
                    data_range.0, data_range.1
                )));
            }
            (u_min, u_max)
        }
    };
    // A single difference magnitude still needs a non-empty interval.
    let (u_min, u_max) = if u_min < u_max {
        (u_min, u_max)
    } else {
        (u_min * 0.5, u_max * 2.0)
    };

    let start = Instant::now();
    let map = SnowflakeMap::build(p / 2.0, eps_snow, u_min, u_max)?;
    let audit = map.audit(AUDIT_SAMPLES);
    timings.snowflake_ms = elapsed_ms(start);

    let start = Instant::now();
    let family = helix_subspaces(points, &map, config.basis_tol)?;
    timings.basis_ms = elapsed_ms(start);

    let start = Instant::now();
    let sparsifier = Sparsifier::new(d_bss)?.with_rank_tol(config.rank_tol)?;
    let selection = simultaneous_sparsify_with(&family, &sparsifier)?;
    timings.sparsify_ms = elapsed_ms(start);

    let start = Instant::now();
    let raw: Vec<Vec<f64>> = points
        .points()
        .iter()
        .map(|z| {
            selection
                .sigma
                .iter()
                .zip(&selection.weights)
                .map(|(&i, &s)| s.powf(1.0 / p) * z[i])
                .collect()
        })
        .collect();
    let certified_factor = (1.0 + eps_snow).powi(4) * selection.kappa.sqrt();
    let scale = match config.normalization {
        Normalization::Certified => certified_factor.powf(1.0 / p),
        Normalization::Balanced => balanced_scale(points, &raw),
    };
    let reduced_points = raw
        .into_iter()
        .map(|w| w.into_iter().map(|x| scale * x).collect())
        .collect();
    timings.emit_ms = elapsed_ms(start);

    let total_dim = family.total_dim();
    Ok((
        ReducedPointSet {
            p,
            k: points.len(),
            n: selection.sigma.len(),
            sigma: selection.sigma,
            weights: selection.weights,
            points: reduced_points,
            normalization: config.normalization,
            normalization_scale: scale,
            certified_factor,
            eps_snow,
            d_bss,
            kappa: selection.kappa,
            rank: selection.rank,
            subspace_total_dim: total_dim,
            support_bound: support_budget(d_bss, total_dim),
            snowflake: Some(map.summary()),
            snowflake_audit: Some(audit),
            degenerate: false,
        },
        timings,
    ))
}

/// Spanning sets of `X_l`, one per helix coordinate `l`. Helix coordinates
/// that vanish on every value of the data span nothing and are dropped.
fn helix_subspaces(points: &LpPointSet, map: &SnowflakeMap, tol: f64) -> Result<SubspaceFamily> {
    let (k, m, s) = (points.len(), points.dim(), map.dim());
    // lifted[j][i * s + l] = phi_l(z_j(i)): block layout, one block per coordinate.
    let lifted: Vec<Vec<f64>> = points
        .points()
        .iter()
        .map(|z| {
            let mut out = vec![0.0; m * s];
            for (i, &x) in z.iter().enumerate() {
                map.eval_into(x, &mut out[i * s..(i + 1) * s]);
            }
            out
        })
        .collect();
    let sets: Vec<Vec<Vec<f64>>> = (0..s)
        .map(|l| {
            (0..k)
                .map(|j| (0..m).map(|i| lifted[j][i * s + l]).collect())
                .collect::<Vec<Vec<f64>>>()
        })
        .filter(|set: &Vec<Vec<f64>>| set.iter().any(|v| v.iter().any(|&x| x != 0.0)))
        .collect();
    SubspaceFamily::from_spanning_sets(m, &sets, tol)
}

fn balanced_scale(points: &LpPointSet, raw: &[Vec<f64>]) -> f64 {
    let p = points.p();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for u in 0..raw.len() {
        for v in u + 1..raw.len() {
            let orig = points.power_distance(u, v);
            if orig > 0.0 {
                let ratio = power_distance(&raw[u], &raw[v], p) / orig;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
    }
    if lo > 0.0 && hi.is_finite() {
        (lo * hi).powf(-0.5 / p)
    } else {
        1.0
    }
}

fn degenerate(
    points: &LpPointSet,
    config: &ReductionConfig,
    eps_snow: f64,
    d_bss: f64,
) -> ReducedPointSet {
    ReducedPointSet {
        p: points.p(),
        k: points.len(),
        n: 1,
        sigma: vec![0],
        weights: vec![1.0],
        points: vec![vec![0.0]; points.len()],
        normalization: config.normalization,
        normalization_scale: 1.0,
        certified_factor: 1.0,
        eps_snow,
        d_bss,
        kappa: 1.0,
        rank: 0,
        subspace_total_dim: 0,
        support_bound: 1,
        snowflake: None,
        snowflake_audit: None,
        degenerate: true,
    }
}

/// Brute-force audit of all `k(k-1)/2` pairwise distance ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// Pairs with nonzero original distance.
    pub pairs: usize,
    /// Pairs with zero original distance, excluded from the ratios.
    pub duplicate_pairs: usize,
    /// Duplicate pairs whose reduced distance is nonzero.
    pub violations: usize,
    /// Extremes of `‖w_u - w_v‖_p / ‖z_u - z_v‖_p`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub min_pair: Option<(usize, usize)>,
    pub max_pair: Option<(usize, usize)>,
    /// Extremes of the `p`-th-power ratios.
    pub min_power_ratio: f64,
    pub max_power_ratio: f64,
    /// `F` on `p`-th powers.
    pub certified_power_factor: f64,
    /// `F^{1/p}` on distances.
    pub certified_distance_factor: f64,
}

impl DistortionReport {
    /// `max_ratio / min_ratio`; invariant under normalization.
    pub fn spread(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }

    /// `spread() <= F^{2/p}` up to a relative slack.
    pub fn within_certificate(&self, slack: f64) -> bool {
        self.violations == 0
            && self.spread() <= self.certified_distance_factor.powi(2) * (1.0 + slack)
    }
}

pub fn measure_distortion(
    original: &LpPointSet,
    reduced: &ReducedPointSet,
) -> Result<DistortionReport> {
    if original.len() != reduced.points.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} original points but {} reduced points",
            original.len(),
            reduced.points.len()
        )));
    }
    if original.p() != reduced.p {
        return Err(invalid(format!(
            "exponent mismatch: original p = {}, reduced p = {}",
            original.p(),
            reduced.p
        )));
    }
    let p = original.p();
    let mut report = DistortionReport {
        pairs: 0,
        duplicate_pairs: 0,
        violations: 0,
        min_ratio: 1.0,
        max_ratio: 1.0,
        min_pair: None,
        max_pair: None,
        min_power_ratio: 1.0,
        max_power_ratio: 1.0,
        certified_power_factor: reduced.certified_factor,
        certified_distance_factor: reduced.certified_distance_factor(),
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for u in 0..original.len() {
        for v in u + 1..original.len() {
            let orig = original.power_distance(u, v);
            let red = power_distance(&reduced.points[u], &reduced.points[v], p);
            if orig == 0.0 {
                report.duplicate_pairs += 1;
                if red != 0.0 {
                    report.violations += 1;
                }
                continue;
            }
            report.pairs += 1;
            let ratio = red / orig;
            if ratio < lo {
                lo = ratio;
                report.min_pair = Some((u, v));
            }
            if ratio > hi {
                hi = ratio;
                report.max_pair = Some((u, v));
            }
        }
    }
    if report.pairs > 0 {
        report.min_power_ratio = lo;
        report.max_power_ratio = hi;
        report.min_ratio = lo.powf(1.0 / p);
        report.max_ratio = hi.powf(1.0 / p);
    }
    Ok(report)
}

/// Size of the construction for a given configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeBound {
    pub k: usize,
    /// Helix dimension `s` the builder produces for the range ratio.
    pub snowflake_dim: usize,
    /// `ceil(d_bss * k * s)`.
    pub construction_bound: usize,
    /// `k / eps^{2 + 2/p}`, the asymptotic shape without its constant.
    pub asymptotic_shape: f64,
}

/// `ceil(d * k * s)`.
pub fn construction_bound(d_bss: f64, k: usize, s: usize) -> usize {
    support_budget(d_bss, k * s)
}

pub fn predicted_n(
    k: usize,
    p: f64,
    config: &ReductionConfig,
    range_ratio: f64,
) -> Result<SizeBound> {
    config.validate()?;
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if !(range_ratio > 1.0 && range_ratio.is_finite()) {
        return Err(invalid(format!(
            "range ratio must exceed 1, got {range_ratio}"
        )));
    }
    let (eps_snow, d_bss) = config.budget.resolve(p)?;
    // The builder is scale-free, so the range ratio determines s.
    let s = SnowflakeMap::build(p / 2.0, eps_snow, 1.0, range_ratio)?.dim();
    let eps = match config.budget {
        EpsilonBudget::Total { eps_total } => eps_total,
        EpsilonBudget::Split { eps_snow, .. } => eps_snow,
    };
    Ok(SizeBound {
        k,
        snowflake_dim: s,
        construction_bound: construction_bound(d_bss, k, s),
        asymptotic_shape: k as f64 / eps.powf(2.0 + 2.0 / p),
    })
}
