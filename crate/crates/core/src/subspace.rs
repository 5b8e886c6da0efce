//! Weighted coordinate selection that preserves Euclidean norms on several
//! subspaces of `R^m` at once.
//!
//! Each subspace `X_l` gets an orthonormal basis `B_l` (`m x k_l`). Row `i`
//! of the concatenation `[B_1 | ... | B_s]` is the vector `v_i`, and
//! `sum_i v_i v_i^T` has identity diagonal blocks. Sparsifying `{v_i}` yields
//! weights `s_i` on a support `sigma` with
//! `B_l^T D B_l ∈ [kappa^{-1/2}, kappa^{1/2}]` for every `l`, i.e.
//!
//! ```text
//! kappa^{-1/2} ‖x‖^2 <= sum_{i in sigma} s_i x(i)^2 <= kappa^{1/2} ‖x‖^2,   x in X_l.
//! ```

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, eigen_bounds, norm, EigenBounds};
use crate::sparsifier::{Sparsifier, VectorFamily};

/// Default relative rank threshold for orthonormalization.
pub const DEFAULT_BASIS_TOL: f64 = 1e-10;

/// Modified Gram–Schmidt with one re-orthogonalization pass. A vector is kept
/// when its residual exceeds `tol` times the largest input norm; input order
/// fixes the result.
pub fn orthonormal_basis(spanning: &[Vec<f64>], tol: f64) -> Result<Vec<Vec<f64>>> {
    let first = spanning
        .first()
        .ok_or_else(|| invalid("spanning set must contain at least one vector"))?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid(format!("tol must lie in (0, 1), got {tol}")));
    }
    let m = first.len();
    if let Some(bad) = spanning.iter().position(|v| v.len() != m) {
        return Err(Error::DimensionMismatch(format!(
            "spanning vector {bad} has length {}, expected {m}",
            spanning[bad].len()
        )));
    }
    let scale = spanning.iter().map(|v| norm(v)).fold(0.0, f64::max);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::EmptySubspace { index: 0 });
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in spanning {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let n = norm(&w);
        if n > tol * scale {
            w.iter_mut().for_each(|x| *x /= n);
            basis.push(w);
        }
    }
    Ok(basis)
}

/// `s` subspaces of `R^m`, held as orthonormal bases packed side by side
/// into an `m x sum(k_l)` matrix.
#[derive(Debug, Clone)]
pub struct SubspaceFamily {
    stacked: Mat<f64>,
    offsets: Vec<usize>,
}

impl SubspaceFamily {
    /// Orthonormalizes each spanning set. Every vector must have length `m`.
    pub fn from_spanning_sets(ambient: usize, sets: &[Vec<Vec<f64>>], tol: f64) -> Result<Self> {
        if sets.is_empty() {
            return Err(invalid(
                "subspace family must contain at least one subspace",
            ));
        }
        let mut bases = Vec::with_capacity(sets.len());
        for (index, set) in sets.iter().enumerate() {
            if set.iter().any(|v| v.len() != ambient) {
                return Err(Error::DimensionMismatch(format!(
                    "subspace {index} has a vector not of length {ambient}"
                )));
            }
            let basis = orthonormal_basis(set, tol).map_err(|e| match e {
                Error::EmptySubspace { .. } => Error::EmptySubspace { index },
                other => other,
            })?;
            bases.push(basis);
        }
        Self::from_bases(ambient, &bases)
    }

    /// Packs bases that are already orthonormal.
    pub fn from_bases(ambient: usize, bases: &[Vec<Vec<f64>>]) -> Result<Self> {
        if ambient == 0 {
            return Err(invalid("ambient dimension must be at least 1"));
        }
        if bases.is_empty() {
            return Err(invalid(
                "subspace family must contain at least one subspace",
            ));
        }
        let mut offsets = vec![0];
        for (index, basis) in bases.iter().enumerate() {
            if basis.is_empty() {
                return Err(Error::EmptySubspace { index });
            }
            if basis.iter().any(|b| b.len() != ambient) {
                return Err(Error::DimensionMismatch(format!(
                    "basis of subspace {index} has a vector not of length {ambient}"
                )));
            }
            offsets.push(offsets[index] + basis.len());
        }
        let total = *offsets.last().unwrap();
        let mut stacked = Mat::<f64>::zeros(ambient, total);
        for (l, basis) in bases.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                for (i, &x) in b.iter().enumerate() {
                    stacked[(i, offsets[l] + j)] = x;
                }
            }
        }
        Ok(Self { stacked, offsets })
    }

    /// Ambient dimension `m`.
    pub fn ambient(&self) -> usize {
        self.stacked.nrows()
    }

    /// Number of subspaces `s`.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Effective dimensions `k_l`.
    pub fn dims(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `sum_l k_l`.
    pub fn total_dim(&self) -> usize {
        self.stacked.ncols()
    }

    /// Orthonormal basis of subspace `l`, one vector per entry.
    pub fn basis(&self, l: usize) -> Vec<Vec<f64>> {
        (self.offsets[l]..self.offsets[l + 1])
            .map(|c| (0..self.ambient()).map(|i| self.stacked[(i, c)]).collect())
            .collect()
    }

    /// The concatenated coordinate vectors `v_i`, one per coordinate of `R^m`.
    pub fn coordinate_vectors(&self) -> Result<VectorFamily> {
        VectorFamily::from_matrix(self.stacked.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSelection {
    /// Selected coordinates, sorted, 0-based.
    pub sigma: Vec<usize>,
    /// Positive weight of each selected coordinate, aligned with `sigma`.
    pub weights: Vec<f64>,
    /// Extreme eigenvalues of `B_l^T D B_l` per subspace.
    pub per_subspace_bounds: Vec<EigenBounds>,
    pub kappa: f64,
    /// Rank of the concatenated Gram matrix.
    pub rank: usize,
    pub d: f64,
}

impl CoordinateSelection {
    /// `[kappa^{-1/2}, kappa^{1/2}]`.
    pub fn sandwich(&self) -> (f64, f64) {
        let root = self.kappa.sqrt();
        (1.0 / root, root)
    }

    /// `sum_{i in sigma} s_i x(i)^2`.
    pub fn weighted_square_norm(&self, x: &[f64]) -> f64 {
        self.sigma
            .iter()
            .zip(&self.weights)
            .map(|(&i, &s)| s * x[i] * x[i])
            .sum()
    }
}

/// Sparsifies the concatenated coordinate vectors with oversampling `d`.
pub fn simultaneous_sparsify(family: &SubspaceFamily, d: f64) -> Result<CoordinateSelection> {
    simultaneous_sparsify_with(family, &Sparsifier::new(d)?)
}

pub fn simultaneous_sparsify_with(
    family: &SubspaceFamily,
    sparsifier: &Sparsifier,
) -> Result<CoordinateSelection> {
    let vectors = family.coordinate_vectors()?;
    let sparse = sparsifier.sparsify(&vectors)?;
    let weights = sparse.support.iter().map(|&i| sparse.weights[i]).collect();
    let mut selection = CoordinateSelection {
        sigma: sparse.support,
        weights,
        per_subspace_bounds: Vec::new(),
        kappa: sparse.kappa,
        rank: sparse.rank,
        d: sparse.d,
    };
    selection.per_subspace_bounds = verify_selection(family, &selection)?;
    Ok(selection)
}

/// Eigenvalues of `B_l^T D B_l` for each subspace, from the bases alone.
pub fn verify_selection(
    family: &SubspaceFamily,
    selection: &CoordinateSelection,
) -> Result<Vec<EigenBounds>> {
    if selection.sigma.len() != selection.weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coordinates but {} weights",
            selection.sigma.len(),
            selection.weights.len()
        )));
    }
    if let Some(&bad) = selection.sigma.iter().find(|&&i| i >= family.ambient()) {
        return Err(Error::DimensionMismatch(format!(
            "coordinate {bad} outside ambient dimension {}",
            family.ambient()
        )));
    }
    let b = &family.stacked;
    family
        .offsets
        .windows(2)
        .map(|w| {
            let (start, k) = (w[0], w[1] - w[0]);
            let mut gram = Mat::<f64>::zeros(k, k);
            for (&i, &s) in selection.sigma.iter().zip(&selection.weights) {
                for a in 0..k {
                    let sa = s * b[(i, start + a)];
                    for c in 0..k {
                        gram[(a, c)] += sa * b[(i, start + c)];
                    }
                }
            }
            eigen_bounds(gram.as_ref())
        })
        .collect()
}
