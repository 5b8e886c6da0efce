//! Thin wrappers over `faer` for the dense kernels used across the crate.

use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extreme eigenvalues of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl EigenBounds {
    /// `true` if both extremes lie in `[lo - slack, hi + slack]`.
    pub fn within(&self, lo: f64, hi: f64, slack: f64) -> bool {
        self.lambda_min >= lo - slack && self.lambda_max <= hi + slack
    }
}

/// Eigenvalues in nondecreasing order with matching eigenvector columns.
pub(crate) fn sym_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenNoConvergence)?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, evd.U().to_owned()))
}

pub(crate) fn sym_eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::EigenNoConvergence)
}

pub(crate) fn eigen_bounds(a: MatRef<'_, f64>) -> Result<EigenBounds> {
    let values = sym_eigenvalues(a)?;
    match (values.first(), values.last()) {
        (Some(&lambda_min), Some(&lambda_max)) => Ok(EigenBounds {
            lambda_min,
            lambda_max,
        }),
        _ => Err(Error::DimensionMismatch("empty matrix".into())),
    }
}

/// Stacks equal-length rows into a matrix. Caller guarantees the lengths.
pub(crate) fn mat_from_rows(rows: &[Vec<f64>], ncols: usize) -> Mat<f64> {
    Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Symmetric eigendecomposition `A = Z diag(values) Z^T` that can absorb
/// rank-one updates `A += w w^T` without a fresh factorization.
#[derive(Debug, Clone)]
pub(crate) struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl SymEigen {
    pub fn new(a: MatRef<'_, f64>) -> Result<Self> {
        let (values, vectors) = sym_eigen(a)?;
        Ok(Self { values, vectors })
    }

    /// Applies `A += w w^T` where `c = Z^T w` are the coordinates of `w` in
    /// the current eigenbasis.
    ///
    /// Poles with negligible weight or nearly equal neighbours are deflated,
    /// the secular equation is solved root by root relative to the nearer
    /// pole, and the update vector is recomputed from the computed roots so
    /// the new eigenvectors stay orthogonal.
    pub fn rank_one_update(&mut self, c: &[f64]) {
        let n = self.values.len();
        let rho: f64 = c.iter().map(|x| x * x).sum();
        if rho == 0.0 || !rho.is_finite() {
            return;
        }
        let norm = rho.sqrt();
        let mut z: Vec<f64> = c.iter().map(|x| x / norm).collect();
        let mut d = self.values.clone();
        let dmax = d.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
        let tol = 8.0 * f64::EPSILON * dmax.max(rho);

        let mut keep = Vec::with_capacity(n);
        let mut prev: Option<usize> = None;
        for i in 0..n {
            if rho * z[i].abs() <= tol {
                z[i] = 0.0;
                continue;
            }
            if let Some(j) = prev {
                let tau = z[j].hypot(z[i]);
                let (cs, sn) = (z[i] / tau, z[j] / tau);
                if (cs * sn * (d[i] - d[j])).abs() <= tol {
                    // Rotate (j, i) so that z_j vanishes and j deflates.
                    z[j] = 0.0;
                    z[i] = tau;
                    let (dj, di) = (d[j], d[i]);
                    d[j] = cs * cs * dj + sn * sn * di;
                    d[i] = sn * sn * dj + cs * cs * di;
                    for r in 0..n {
                        let (a, b) = (self.vectors[(r, j)], self.vectors[(r, i)]);
                        self.vectors[(r, j)] = cs * a - sn * b;
                        self.vectors[(r, i)] = sn * a + cs * b;
                    }
                } else {
                    keep.push(j);
                }
            }
            prev = Some(i);
        }
        if let Some(j) = prev {
            keep.push(j);
        }
        keep.sort_by(|&a, &b| d[a].total_cmp(&d[b]));

        let k = keep.len();
        let poles: Vec<f64> = keep.iter().map(|&i| d[i]).collect();
        let zk: Vec<f64> = keep.iter().map(|&i| z[i]).collect();
        let z2: Vec<f64> = zk.iter().map(|x| x * x).collect();

        // delta[(j, i)] = poles[i] - lambda_j, formed without cancellation.
        let mut delta = Mat::<f64>::zeros(k, k);
        let mut roots = vec![0.0; k];
        let mut shifted = vec![0.0; k];
        for j in 0..k {
            let (origin, lo, hi) = if j + 1 < k {
                let gap = poles[j + 1] - poles[j];
                let mid = 0.5 * gap;
                let f: f64 = 1.0
                    + rho
                        * (0..k)
                            .map(|i| z2[i] / ((poles[i] - poles[j]) - mid))
                            .sum::<f64>();
                if f >= 0.0 {
                    (j, 0.0, mid)
                } else {
                    (j + 1, mid - gap, 0.0)
                }
            } else {
                (j, 0.0, rho)
            };
            for i in 0..k {
                shifted[i] = poles[i] - poles[origin];
            }
            let tau = secular_root(&shifted, &z2, rho, j, lo, hi);
            roots[j] = poles[origin] + tau;
            for i in 0..k {
                delta[(j, i)] = shifted[i] - tau;
            }
        }

        // Recompute z from the roots, then form eigenvectors of D + rho z z^T.
        let mut zhat = vec![0.0; k];
        for i in 0..k {
            let mut prod = -delta[(k - 1, i)] / rho;
            for j in 0..i {
                prod *= delta[(j, i)] / (poles[i] - poles[j]);
            }
            for j in i..k.saturating_sub(1) {
                prod *= delta[(j, i)] / (poles[i] - poles[j + 1]);
            }
            zhat[i] = prod.max(0.0).sqrt().copysign(zk[i]);
        }
        let mut q = Mat::<f64>::zeros(k, k);
        for j in 0..k {
            let mut s = 0.0;
            for i in 0..k {
                let v = zhat[i] / delta[(j, i)];
                q[(i, j)] = v;
                s += v * v;
            }
            let s = s.sqrt();
            for i in 0..k {
                q[(i, j)] /= s;
            }
        }
        let basis = Mat::from_fn(n, k, |r, c| self.vectors[(r, keep[c])]);
        let rotated = &basis * &q;

        let mut columns: Vec<(f64, usize, bool)> = Vec::with_capacity(n);
        let mut kept = vec![false; n];
        for &i in &keep {
            kept[i] = true;
        }
        for (i, &flag) in kept.iter().enumerate() {
            if !flag {
                columns.push((d[i], i, false));
            }
        }
        for (j, &root) in roots.iter().enumerate() {
            columns.push((root, j, true));
        }
        columns.sort_by(|a, b| a.0.total_cmp(&b.0));
        let old = &self.vectors;
        let vectors = Mat::from_fn(n, n, |r, c| {
            let (_, idx, new) = columns[c];
            if new {
                rotated[(r, idx)]
            } else {
                old[(r, idx)]
            }
        });
        self.values = columns.iter().map(|c| c.0).collect();
        self.vectors = vectors;
    }
}

/// Root of `1 + rho * sum z2_i / (shifted_i - tau)` inside `(lo, hi)`, where
/// the function is increasing and `left` indexes the pole bounding the
/// interval from below.
///
/// Each step fits `c + s / (Δl - η) + S / (Δr - η)` to the value and the
/// slopes of the two partial sums split at `left` and solves the model
/// exactly; steps leaving the bracket fall back to bisection.
fn secular_root(
    shifted: &[f64],
    z2: &[f64],
    rho: f64,
    left: usize,
    mut lo: f64,
    mut hi: f64,
) -> f64 {
    let has_right = left + 1 < shifted.len();
    let mut tau = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (mut psi, mut dpsi, mut phi, mut dphi) = (0.0, 0.0, 0.0, 0.0);
        for (i, (&sh, &w)) in shifted.iter().zip(z2).enumerate() {
            let inv = 1.0 / (sh - tau);
            let term = rho * w * inv;
            if i <= left {
                psi += term;
                dpsi += term * inv;
            } else {
                phi += term;
                dphi += term * inv;
            }
        }
        let f = 1.0 + psi + phi;
        if f == 0.0 {
            return tau;
        }
        if f < 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        let dl = shifted[left] - tau;
        let eta = if has_right {
            let dr = shifted[left + 1] - tau;
            let (sl, sr) = (dl * dl * dpsi, dr * dr * dphi);
            let c = f - dl * dpsi - dr * dphi;
            let b = c * (dl + dr) + sl + sr;
            let q = c * dl * dr + sl * dr + sr * dl;
            let disc = (b * b - 4.0 * c * q).max(0.0).sqrt();
            if c == 0.0 {
                q / b
            } else {
                let (e1, e2) = if b >= 0.0 {
                    ((b + disc) / (2.0 * c), 2.0 * q / (b + disc))
                } else {
                    (2.0 * q / (b - disc), (b - disc) / (2.0 * c))
                };
                if e1 > dl && e1 < dr {
                    e1
                } else {
                    e2
                }
            }
        } else {
            let sl = dl * dl * dpsi;
            let c = f - dl * dpsi;
            dl + sl / c
        };
        let mut next = tau + eta;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - tau).abs() <= 2.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE)
            || next <= lo
            || next >= hi
        {
            return next.clamp(lo, hi);
        }
        tau = next;
    }
    tau
}
