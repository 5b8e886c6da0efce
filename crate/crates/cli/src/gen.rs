//! Seeded synthetic point sets.

use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    /// i.i.d. `N(0, scale^2)` coordinates.
    Gaussian,
    /// `scale * e_i` for `i < k`; every pairwise `l_1` distance is `2 * scale`.
    Simplex,
    /// `ceil(sqrt(k))` Gaussian centres with tight Gaussian clouds around them.
    Clustered,
}

/// Relative standard deviation of a cluster around its centre.
const CLUSTER_SPREAD: f64 = 0.05;

pub fn generate(
    kind: GenKind,
    k: usize,
    m: usize,
    scale: f64,
    seed: u64,
) -> CliResult<Vec<Vec<f64>>> {
    if k == 0 || m == 0 {
        return Err(CliError::Validation(format!(
            "k and m must be positive, got k = {k}, m = {m}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Validation(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let points = match kind {
        GenKind::Gaussian => (0..k)
            .map(|_| (0..m).map(|_| scale * normal()).collect())
            .collect(),
        GenKind::Simplex => {
            if k > m {
                return Err(CliError::Validation(format!(
                    "simplex needs k <= m, got k = {k}, m = {m}"
                )));
            }
            (0..k)
                .map(|i| {
                    let mut row = vec![0.0; m];
                    row[i] = scale;
                    row
                })
                .collect()
        }
        GenKind::Clustered => {
            let clusters = (k as f64).sqrt().ceil() as usize;
            let centres: Vec<Vec<f64>> = (0..clusters)
                .map(|_| (0..m).map(|_| scale * normal()).collect())
                .collect();
            (0..k)
                .map(|i| {
                    centres[i % clusters]
                        .iter()
                        .map(|c| c + CLUSTER_SPREAD * scale * normal())
                        .collect()
                })
                .collect()
        }
    };
    Ok(points)
}
