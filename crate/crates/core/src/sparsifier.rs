//! Deterministic barrier-potential spectral sparsification.
//!
//! Given `v_1..v_m` in `R^k` with `A = sum v_i v_i^T`, finds nonnegative
//! weights supported on at most `ceil(d * rank(A))` indices such that
//! `Ã = sum s_i v_i v_i^T` satisfies
//!
//! ```text
//! kappa^{-1/2} x^T A x <= x^T Ã x <= kappa^{1/2} x^T A x,
//! kappa <= ((sqrt(d) + 1) / (sqrt(d) - 1))^2
//! ```
//!
//! The vectors are first whitened so that `A` becomes the identity on its
//! range. Two barriers `l < eig(M) < u` then advance by fixed steps while one
//! rank-one term is added per step; the potentials `tr(uI - M)^{-1}` and
//! `tr(M - lI)^{-1}` never increase, which keeps every eigenvalue of `M`
//! strictly between the barriers.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{eigen_bounds, mat_from_rows, sym_eigen, EigenBounds, SymEigen};

/// Steps between full refactorizations of `M`; rank-one updates in between.
const REFRESH_INTERVAL: usize = 64;

/// Relative eigenvalue threshold defining the effective rank of `A`.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Slack on the potential bounds checked at every step.
pub const POTENTIAL_SLACK: f64 = 1e-9;

/// Candidate vectors are scored in blocks of this size, in index order.
const SCORE_BLOCK: usize = 64;

/// `m` vectors of common dimension `k`, stored as the rows of an `m x k` matrix.
#[derive(Debug, Clone)]
pub struct VectorFamily {
    rows: Mat<f64>,
}

impl VectorFamily {
    /// Fails on an empty family, inconsistent lengths, zero dimension, or
    /// non-finite entries.
    pub fn new(vectors: &[Vec<f64>]) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| invalid("vector family must contain at least one vector"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(invalid("vectors must have dimension at least 1"));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "vector {i} has length {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("vector {i} has a non-finite entry")));
            }
        }
        Ok(Self {
            rows: mat_from_rows(vectors, dim),
        })
    }

    pub(crate) fn from_matrix(rows: Mat<f64>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(invalid("vector family must be non-empty"));
        }
        Ok(Self { rows })
    }

    /// Vector dimension `k`.
    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    /// Number of vectors `m`.
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        (0..self.dim()).map(|j| self.rows[(i, j)]).collect()
    }

    pub(crate) fn as_mat(&self) -> MatRef<'_, f64> {
        self.rows.as_ref()
    }
}

/// Output of the sparsifier. `weights` has one entry per input vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseWeights {
    pub weights: Vec<f64>,
    /// Sorted indices of strictly positive weights.
    pub support: Vec<usize>,
    /// Effective rank `r` of `A`.
    pub rank: usize,
    /// Oversampling parameter.
    pub d: f64,
    /// Final barrier ratio `u_T / l_T`; bounds the condition number of the
    /// whitened weighted sum.
    pub kappa: f64,
    /// Global factor `1 / sqrt(u_T l_T)` applied to the accumulated weights.
    pub scale: f64,
}

impl SparseWeights {
    /// `[kappa^{-1/2}, kappa^{1/2}]`, the interval holding every eigenvalue of
    /// the whitened weighted sum.
    pub fn sandwich(&self) -> (f64, f64) {
        let root = self.kappa.sqrt();
        (1.0 / root, root)
    }
}

/// Barrier state at the start of a step (and once more after the last step).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierStep {
    pub step: usize,
    pub lower: f64,
    pub upper: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    /// `tr(uI - M)^{-1}`
    pub upper_potential: f64,
    /// `tr(M - lI)^{-1}`
    pub lower_potential: f64,
    /// Index chosen in this step; `None` for the final record.
    pub chosen: Option<usize>,
    pub increment: f64,
}

/// `((sqrt(d) + 1) / (sqrt(d) - 1))^2`.
pub fn condition_bound(d: f64) -> f64 {
    let s = d.sqrt();
    ((s + 1.0) / (s - 1.0)).powi(2)
}

/// `ceil(d * rank)`, tolerant of rounding in `d` (e.g. `25/9 * 9`).
pub fn support_budget(d: f64, rank: usize) -> usize {
    let x = d * rank as f64;
    (x - 1e-9 * x.max(1.0)).ceil().max(0.0) as usize
}

/// Smallest `d` whose per-side factor `(sqrt(d) + 1) / (sqrt(d) - 1)` is at most
/// `(1 + eps)^2`, the two-sided form `(1 + eps)^{±2}` of the sandwich.
pub fn d_for_eps(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    let q = (1.0 + eps).powi(2);
    let root = (q + 1.0) / (q - 1.0);
    Ok(root * root)
}

/// Configured sparsifier.
#[derive(Debug, Clone, Copy)]
pub struct Sparsifier {
    d: f64,
    rank_tol: f64,
}

impl Sparsifier {
    pub fn new(d: f64) -> Result<Self> {
        if !(d > 1.0 && d.is_finite()) {
            return Err(invalid(format!("oversampling d must be > 1, got {d}")));
        }
        Ok(Self {
            d,
            rank_tol: DEFAULT_RANK_TOL,
        })
    }

    pub fn with_rank_tol(mut self, rank_tol: f64) -> Result<Self> {
        if !(rank_tol > 0.0 && rank_tol < 1.0) {
            return Err(invalid(format!(
                "rank_tol must lie in (0, 1), got {rank_tol}"
            )));
        }
        self.rank_tol = rank_tol;
        Ok(self)
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn sparsify(&self, family: &VectorFamily) -> Result<SparseWeights> {
        self.run(family, false).map(|(w, _)| w)
    }

    /// Like [`sparsify`](Self::sparsify), also returning the barrier state of
    /// every step.
    pub fn sparsify_traced(
        &self,
        family: &VectorFamily,
    ) -> Result<(SparseWeights, Vec<BarrierStep>)> {
        self.run(family, true)
    }

    fn run(
        &self,
        family: &VectorFamily,
        keep_trace: bool,
    ) -> Result<(SparseWeights, Vec<BarrierStep>)> {
        let white = whiten(family.as_mat(), self.rank_tol)?;
        let m = white.nrows();
        let r = white.ncols();
        let active: Vec<bool> = (0..m)
            .map(|i| (0..r).any(|j| white[(i, j)] != 0.0))
            .collect();

        let d = self.d;
        let sd = d.sqrt();
        let rf = r as f64;
        let delta_lower = 1.0;
        let delta_upper = (sd + 1.0) / (sd - 1.0);
        let upper_bound = (sd - 1.0) / (d + sd);
        let lower_bound = 1.0 / sd;
        let mut lower = -rf * sd;
        let mut upper = rf * (d + sd) / (sd - 1.0);

        let steps = support_budget(d, r);
        let mut acc = Mat::<f64>::zeros(r, r);
        let mut weights = vec![0.0; m];
        let mut trace = Vec::with_capacity(if keep_trace { steps + 1 } else { 0 });

        let mut eig = SymEigen::new(acc.as_ref())?;
        for step in 0..steps {
            if step > 0 && step % REFRESH_INTERVAL == 0 {
                eig = SymEigen::new(acc.as_ref())?;
            }
            let (mu, z) = (&eig.values, &eig.vectors);
            let state = check_barriers(step, mu, lower, upper, upper_bound, lower_bound)?;

            let next_lower = lower + delta_lower;
            let next_upper = upper + delta_upper;
            if next_lower >= mu[0] {
                return Err(breakdown(
                    step,
                    mu,
                    lower,
                    upper,
                    "shifted lower barrier meets spectrum",
                ));
            }
            // Potential decrements, written as sums of positive terms.
            let dphi_upper: f64 = mu
                .iter()
                .map(|&x| delta_upper / ((upper - x) * (next_upper - x)))
                .sum();
            let dphi_lower: f64 = mu
                .iter()
                .map(|&x| delta_lower / ((x - next_lower) * (x - lower)))
                .sum();

            let (index, score_u, score_l) = select(
                white.as_ref(),
                z.as_ref(),
                mu,
                &active,
                next_upper,
                next_lower,
                dphi_upper,
                dphi_lower,
            )
            .ok_or(Error::NoAdmissibleVector { step, lower, upper })?;

            let t = 2.0 / (score_u + score_l);
            weights[index] += t;
            let root_t = t.sqrt();
            let coords: Vec<f64> = (0..r)
                .map(|j| root_t * (0..r).map(|a| white[(index, a)] * z[(a, j)]).sum::<f64>())
                .collect();
            eig.rank_one_update(&coords);
            for a in 0..r {
                let wa = t * white[(index, a)];
                for b in 0..r {
                    acc[(a, b)] += wa * white[(index, b)];
                }
            }
            if keep_trace {
                trace.push(BarrierStep {
                    chosen: Some(index),
                    increment: t,
                    ..state
                });
            }
            lower = next_lower;
            upper = next_upper;
        }

        let (mu, _) = sym_eigen(acc.as_ref())?;
        let last = check_barriers(steps, &mu, lower, upper, upper_bound, lower_bound)?;
        if keep_trace {
            trace.push(last);
        }

        let scale = 1.0 / (upper * lower).sqrt();
        for w in &mut weights {
            *w *= scale;
        }
        let support = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok((
            SparseWeights {
                weights,
                support,
                rank: r,
                d,
                kappa: upper / lower,
                scale,
            },
            trace,
        ))
    }
}

/// Runs [`Sparsifier`] with the default rank tolerance.
pub fn bss_sparsify(family: &VectorFamily, d: f64) -> Result<SparseWeights> {
    Sparsifier::new(d)?.sparsify(family)
}

fn breakdown(step: usize, mu: &[f64], lower: f64, upper: f64, detail: &str) -> Error {
    Error::BarrierBreakdown {
        step,
        lower,
        upper,
        eig_min: mu.first().copied().unwrap_or(f64::NAN),
        eig_max: mu.last().copied().unwrap_or(f64::NAN),
        detail: detail.to_string(),
    }
}

fn check_barriers(
    step: usize,
    mu: &[f64],
    lower: f64,
    upper: f64,
    upper_bound: f64,
    lower_bound: f64,
) -> Result<BarrierStep> {
    let (eig_min, eig_max) = (mu[0], mu[mu.len() - 1]);
    if !(lower < eig_min && eig_max < upper) {
        return Err(breakdown(
            step,
            mu,
            lower,
            upper,
            "spectrum left the barrier interval",
        ));
    }
    let upper_potential: f64 = mu.iter().map(|&x| 1.0 / (upper - x)).sum();
    let lower_potential: f64 = mu.iter().map(|&x| 1.0 / (x - lower)).sum();
    if upper_potential > upper_bound + POTENTIAL_SLACK {
        return Err(breakdown(
            step,
            mu,
            lower,
            upper,
            &format!("upper potential {upper_potential} exceeds {upper_bound}"),
        ));
    }
    if lower_potential > lower_bound + POTENTIAL_SLACK {
        return Err(breakdown(
            step,
            mu,
            lower,
            upper,
            &format!("lower potential {lower_potential} exceeds {lower_bound}"),
        ));
    }
    Ok(BarrierStep {
        step,
        lower,
        upper,
        eig_min,
        eig_max,
        upper_potential,
        lower_potential,
        chosen: None,
        increment: 0.0,
    })
}

/// Smallest active index with `U_i <= L_i`, scored block by block.
#[allow(clippy::too_many_arguments)]
fn select(
    white: MatRef<'_, f64>,
    z: MatRef<'_, f64>,
    mu: &[f64],
    active: &[bool],
    next_upper: f64,
    next_lower: f64,
    dphi_upper: f64,
    dphi_lower: f64,
) -> Option<(usize, f64, f64)> {
    let m = white.nrows();
    let inv_upper: Vec<f64> = mu.iter().map(|&x| 1.0 / (next_upper - x)).collect();
    let inv_lower: Vec<f64> = mu.iter().map(|&x| 1.0 / (x - next_lower)).collect();
    let mut start = 0;
    while start < m {
        let len = SCORE_BLOCK.min(m - start);
        // Coordinates of each candidate in the eigenbasis of M.
        let y = white.subrows(start, len) * z;
        for row in 0..len {
            let i = start + row;
            if !active[i] {
                continue;
            }
            let (mut u1, mut u2, mut l1, mut l2) = (0.0, 0.0, 0.0, 0.0);
            for (j, (&iu, &il)) in inv_upper.iter().zip(&inv_lower).enumerate() {
                let y2 = y[(row, j)] * y[(row, j)];
                u1 += y2 * iu;
                u2 += y2 * iu * iu;
                l1 += y2 * il;
                l2 += y2 * il * il;
            }
            let score_u = u2 / dphi_upper + u1;
            let score_l = l2 / dphi_lower - l1;
            if score_u > 0.0 && score_u <= score_l {
                return Some((i, score_u, score_l));
            }
        }
        start += len;
    }
    None
}

/// Rows `w_i = Λ_r^{-1/2} Q_r^T v_i`, where `A = Q Λ Q^T` restricted to
/// eigenvalues above `rank_tol * λ_max`. Zero input rows map to exact zeros.
///
/// When `m < k` the `m x m` Gram matrix `V V^T` is decomposed instead; its
/// nonzero spectrum equals that of `A`, and the resulting rows agree with the
/// `A` route up to an orthogonal change of basis, which the barrier scores do
/// not see.
pub(crate) fn whiten(v: MatRef<'_, f64>, rank_tol: f64) -> Result<Mat<f64>> {
    let (m, k) = (v.nrows(), v.ncols());
    if k <= m {
        let a = v.transpose() * v;
        let (lambda, q) = sym_eigen(a.as_ref())?;
        let keep = kept(&lambda, rank_tol)?;
        let basis = Mat::from_fn(k, keep.len(), |i, j| {
            q[(i, keep[j])] / lambda[keep[j]].sqrt()
        });
        Ok(v * basis)
    } else {
        let g = v * v.transpose();
        let (lambda, u) = sym_eigen(g.as_ref())?;
        let keep = kept(&lambda, rank_tol)?;
        let basis = Mat::from_fn(m, keep.len(), |i, j| u[(i, keep[j])] / lambda[keep[j]]);
        Ok(&g * basis)
    }
}

fn kept(lambda: &[f64], rank_tol: f64) -> Result<Vec<usize>> {
    let top = lambda.last().copied().unwrap_or(0.0);
    if top.is_nan() || top <= 0.0 {
        return Err(Error::ZeroFamily);
    }
    Ok((0..lambda.len())
        .filter(|&j| lambda[j] > rank_tol * top)
        .collect())
}

/// Extreme eigenvalues of `Λ_r^{-1/2} Q_r^T Ã Q_r Λ_r^{-1/2}`, computed from
/// the `k x k` matrices `A` and `Ã` directly.
pub fn verify_sandwich(family: &VectorFamily, weights: &SparseWeights) -> Result<EigenBounds> {
    let v = family.as_mat();
    let (m, k) = (v.nrows(), v.ncols());
    if weights.weights.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {m} vectors",
            weights.weights.len()
        )));
    }
    let a = v.transpose() * v;
    let weighted = Mat::from_fn(m, k, |i, j| weights.weights[i] * v[(i, j)]);
    let a_tilde = v.transpose() * &weighted;
    let (lambda, q) = sym_eigen(a.as_ref())?;
    let keep = kept(&lambda, DEFAULT_RANK_TOL)?;
    let p = Mat::from_fn(k, keep.len(), |i, j| {
        q[(i, keep[j])] / lambda[keep[j]].sqrt()
    });
    let whitened = p.transpose() * &a_tilde * &p;
    let sym = Mat::from_fn(whitened.nrows(), whitened.ncols(), |i, j| {
        0.5 * (whitened[(i, j)] + whitened[(j, i)])
    });
    eigen_bounds(sym.as_ref())
}
