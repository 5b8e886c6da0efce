//! Finite-dimensional helix realizing the snowflake metric `|x - y|^rho`.
//!
//! The map sends `t` to `c * (a_j cos(lambda_j t), a_j sin(lambda_j t))_{j=1..J}`
//! so that
//!
//! ```text
//! ‖phi(x) - phi(y)‖^2 = c^2 * sum_j 2 a_j^2 (1 - cos(lambda_j (x - y)))
//! ```
//!
//! which discretizes `∫_0^∞ (1 - cos(lambda u)) lambda^{-(1 + 2 rho)} dlambda =
//! C(rho) |u|^{2 rho}` on geometric frequency bands. Each `a_j^2` is the exact
//! integral of `lambda^{-(1 + 2 rho)}` over its band, and `lambda_j` is the
//! band's geometric midpoint. The guarantee only holds on the declared range
//! `[u_min, u_max]` of `|x - y|`, which is audited after construction.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Grid size used by [`SnowflakeMap::build`] when auditing candidates.
pub const AUDIT_SAMPLES: usize = 10_000;

/// Hard cap on the number of frequencies `J`.
pub const MAX_FREQUENCIES: usize = 1 << 20;

const THETA_LOW: f64 = 1e-2;
const THETA_HIGH: f64 = 1e2;
/// Largest share of the error budget either truncated tail may take.
const TAIL_SHARE: f64 = 0.125;
/// Log-spacing of the first candidate grid.
const INITIAL_LOG_STEP: f64 = 0.5;
const MAX_WIDENINGS: usize = 8;

/// `C(rho) = ∫_0^∞ (1 - cos v) v^{-(1 + 2 rho)} dv = pi / (2 Γ(1 + 2 rho) sin(pi rho))`.
pub fn helix_constant(rho: f64) -> f64 {
    std::f64::consts::PI
        / (2.0 * libm::tgamma(1.0 + 2.0 * rho) * (std::f64::consts::PI * rho).sin())
}

/// Dimensionless frequency window: frequencies span
/// `[theta_low / u_max, theta_high / u_min]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyWindow {
    pub theta_low: f64,
    pub theta_high: f64,
}

impl FrequencyWindow {
    /// Starts at `[1e-2, 1e2]` and widens each side by 10x until the analytic
    /// tail estimate at the corresponding range endpoint is below
    /// `eps / 8` of `C(rho) u^{2 rho}`.
    pub fn for_target(rho: f64, eps: f64) -> Self {
        let c = helix_constant(rho);
        let budget = TAIL_SHARE * eps;
        // Low tail at u = u_max: ∫_0^{lo} (1 - cos) ≤ (lo u)^{2 - 2 rho} / (4 (1 - rho)).
        let low_tail = |theta: f64| theta.powf(2.0 - 2.0 * rho) / (4.0 * (1.0 - rho) * c);
        // High tail at u = u_min: ∫_{hi}^∞ (1 - cos) ≤ (hi u)^{-2 rho} / rho.
        let high_tail = |theta: f64| theta.powf(-2.0 * rho) / (rho * c);
        let mut theta_low = THETA_LOW;
        while low_tail(theta_low) > budget && theta_low > 1e-300 {
            theta_low /= 10.0;
        }
        let mut theta_high = THETA_HIGH;
        while high_tail(theta_high) > budget && theta_high < 1e300 {
            theta_high *= 10.0;
        }
        Self {
            theta_low,
            theta_high,
        }
    }

    fn widened(self) -> Self {
        Self {
            theta_low: self.theta_low / 10.0,
            theta_high: self.theta_high * 10.0,
        }
    }

    fn log_span(&self, u_min: f64, u_max: f64) -> f64 {
        (self.theta_high / u_min).ln() - (self.theta_low / u_max).ln()
    }
}

/// Trigonometric approximation of a helix in `R^{2J}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnowflakeMap {
    rho: f64,
    eps_target: f64,
    u_min: f64,
    u_max: f64,
    window: FrequencyWindow,
    frequencies: Vec<f64>,
    amplitudes: Vec<f64>,
    calibration: f64,
}

/// Extremes of `distance(u) / u^rho` over a log-spaced grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnowflakeAudit {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin_u: f64,
    pub argmax_u: f64,
    pub samples: usize,
}

impl SnowflakeAudit {
    pub fn spread(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }

    /// `true` if all audited ratios lie in `[1/(1+eps), 1+eps]`.
    pub fn within(&self, eps: f64) -> bool {
        self.max_ratio <= 1.0 + eps && self.min_ratio >= 1.0 / (1.0 + eps)
    }
}

/// Serialized form of a map. Frequencies and amplitudes are reconstructible
/// from these fields with [`SnowflakeMap::discretize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnowflakeSummary {
    pub rho: f64,
    pub eps: f64,
    pub u_min: f64,
    pub u_max: f64,
    #[serde(rename = "J")]
    pub frequencies: usize,
    pub dim: usize,
    pub calibration: f64,
    pub theta_low: f64,
    pub theta_high: f64,
}

fn validate(rho: f64, eps: f64, u_min: f64, u_max: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("rho must lie in (0, 1), got {rho}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!(
            "eps must be positive and finite, got {eps}"
        )));
    }
    if !(u_min > 0.0 && u_min.is_finite() && u_max.is_finite()) {
        return Err(invalid(format!(
            "range endpoints must be positive and finite, got [{u_min}, {u_max}]"
        )));
    }
    if u_min >= u_max {
        return Err(invalid(format!(
            "range must satisfy u_min < u_max, got [{u_min}, {u_max}]"
        )));
    }
    Ok(())
}

/// `n` points from `lo` to `hi`, equally spaced in `ln u`, endpoints exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let last = (n - 1) as f64;
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    i if i == n - 1 => hi,
                    i => (a + (b - a) * i as f64 / last).exp(),
                })
                .collect()
        }
    }
}

impl SnowflakeMap {
    /// Builds a map whose audit over [`AUDIT_SAMPLES`] log-spaced `u` in
    /// `[u_min, u_max]` lies within `1 ± eps`, doubling `J` until it does.
    ///
    /// The frequency window is sized from analytic tail estimates and widened
    /// again if doubling `J` stops shrinking the error.
    pub fn build(rho: f64, eps: f64, u_min: f64, u_max: f64) -> Result<Self> {
        validate(rho, eps, u_min, u_max)?;
        let mut window = FrequencyWindow::for_target(rho, eps);
        let mut n = initial_frequency_count(&window, u_min, u_max);
        let mut widenings = 0;
        let mut previous: Option<SnowflakeAudit> = None;
        loop {
            let map = Self::discretize(rho, eps, u_min, u_max, window, n)?;
            let audit = map.audit(AUDIT_SAMPLES);
            if audit.within(eps) {
                return Ok(map);
            }
            let stalled = previous
                .map(|p| audit.spread() - 1.0 > 0.9 * (p.spread() - 1.0))
                .unwrap_or(false);
            if stalled && widenings < MAX_WIDENINGS {
                // Discretization is no longer the dominant error: widen the
                // window at the current log-step.
                let step = window.log_span(u_min, u_max) / n as f64;
                window = window.widened();
                n = (window.log_span(u_min, u_max) / step).ceil() as usize;
                widenings += 1;
            } else {
                n *= 2;
            }
            if n > MAX_FREQUENCIES {
                return Err(Error::SnowflakeConstruction {
                    frequencies: map.num_frequencies(),
                    min_ratio: audit.min_ratio,
                    max_ratio: audit.max_ratio,
                    eps,
                });
            }
            previous = Some(audit);
        }
    }

    /// Discretizes the helix on `n_freq` geometric bands of `window` without
    /// auditing. Calibrated so that `distance(sqrt(u_min u_max)) = sqrt(u_min u_max)^rho`.
    pub fn discretize(
        rho: f64,
        eps: f64,
        u_min: f64,
        u_max: f64,
        window: FrequencyWindow,
        n_freq: usize,
    ) -> Result<Self> {
        validate(rho, eps, u_min, u_max)?;
        if n_freq == 0 || n_freq > MAX_FREQUENCIES {
            return Err(invalid(format!(
                "frequency count must lie in [1, {MAX_FREQUENCIES}], got {n_freq}"
            )));
        }
        if !(window.theta_low > 0.0 && window.theta_high > 0.0) {
            return Err(invalid("frequency window must be positive"));
        }
        let lo = window.theta_low / u_max;
        let hi = window.theta_high / u_min;
        if lo >= hi {
            return Err(invalid("frequency window is empty"));
        }
        let log_lo = lo.ln();
        let step = (hi.ln() - log_lo) / n_freq as f64;
        let edge = |j: usize| (log_lo + step * j as f64).exp();
        let frequencies: Vec<f64> = (0..n_freq)
            .map(|j| (log_lo + step * (j as f64 + 0.5)).exp())
            .collect();
        let amplitudes: Vec<f64> = (0..n_freq)
            .map(|j| {
                let mass = (edge(j).powf(-2.0 * rho) - edge(j + 1).powf(-2.0 * rho)) / (2.0 * rho);
                mass.sqrt()
            })
            .collect();
        let mut map = Self {
            rho,
            eps_target: eps,
            u_min,
            u_max,
            window,
            frequencies,
            amplitudes,
            calibration: 1.0,
        };
        let center = (u_min * u_max).sqrt();
        let raw = map.distance(center);
        if !(raw > 0.0 && raw.is_finite()) {
            return Err(invalid("degenerate frequency grid"));
        }
        map.calibration = center.powf(rho) / raw;
        Ok(map)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eps_target(&self) -> f64 {
        self.eps_target
    }

    /// Validated range `(u_min, u_max)` of difference magnitudes.
    pub fn range(&self) -> (f64, f64) {
        (self.u_min, self.u_max)
    }

    pub fn window(&self) -> FrequencyWindow {
        self.window
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn calibration(&self) -> f64 {
        self.calibration
    }

    pub fn num_frequencies(&self) -> usize {
        self.frequencies.len()
    }

    /// Output dimension `s = 2J`.
    pub fn dim(&self) -> usize {
        2 * self.frequencies.len()
    }

    /// `phi(t)` as `(cos, sin)` pairs, one per frequency.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    /// Writes `phi(t)` into `out`, which must have length [`dim`](Self::dim).
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        assert_eq!(
            out.len(),
            self.dim(),
            "output length must equal map dimension"
        );
        for (j, (&lambda, &a)) in self.frequencies.iter().zip(&self.amplitudes).enumerate() {
            // Split lambda * t into hi + lo so large phases keep full precision.
            let hi = lambda * t;
            let lo = lambda.mul_add(t, -hi);
            let (s, c) = hi.sin_cos();
            let amp = self.calibration * a;
            out[2 * j] = amp * (c - lo * s);
            out[2 * j + 1] = amp * (s + lo * c);
        }
    }

    /// `‖phi(x) - phi(y)‖` for `u = x - y`, in closed form.
    pub fn distance(&self, u: f64) -> f64 {
        let sum: f64 = self
            .frequencies
            .iter()
            .zip(&self.amplitudes)
            .map(|(&lambda, &a)| {
                let h = (0.5 * lambda * u).sin();
                4.0 * a * a * h * h
            })
            .sum();
        self.calibration * sum.sqrt()
    }

    /// Ratios `distance(u) / u^rho` over `n_samples` log-spaced points of the
    /// validated range.
    pub fn audit(&self, n_samples: usize) -> SnowflakeAudit {
        let n = n_samples.max(2);
        let mut report = SnowflakeAudit {
            min_ratio: f64::INFINITY,
            max_ratio: f64::NEG_INFINITY,
            argmin_u: self.u_min,
            argmax_u: self.u_min,
            samples: n,
        };
        for u in log_grid(self.u_min, self.u_max, n) {
            let ratio = self.distance(u) / u.powf(self.rho);
            if ratio < report.min_ratio {
                report.min_ratio = ratio;
                report.argmin_u = u;
            }
            if ratio > report.max_ratio {
                report.max_ratio = ratio;
                report.argmax_u = u;
            }
        }
        report
    }

    pub fn summary(&self) -> SnowflakeSummary {
        SnowflakeSummary {
            rho: self.rho,
            eps: self.eps_target,
            u_min: self.u_min,
            u_max: self.u_max,
            frequencies: self.num_frequencies(),
            dim: self.dim(),
            calibration: self.calibration,
            theta_low: self.window.theta_low,
            theta_high: self.window.theta_high,
        }
    }
}

fn initial_frequency_count(window: &FrequencyWindow, u_min: f64, u_max: f64) -> usize {
    ((window.log_span(u_min, u_max) / INITIAL_LOG_STEP).ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Composite Simpson on [0, A] plus the leading tail terms on [A, ∞).
    /// Independent of the closed-form Gamma expression.
    fn quadrature_constant(rho: f64) -> f64 {
        let f = |v: f64| {
            if v == 0.0 {
                // Limit of the integrand, v^{1 - 2rho} / 2.
                0.5 * v.powf(1.0 - 2.0 * rho)
            } else {
                let s = (0.5 * v).sin();
                2.0 * s * s * v.powf(-1.0 - 2.0 * rho)
            }
        };
        let a = 2.0e3 * std::f64::consts::PI;
        let n = 4_000_000usize;
        let h = a / n as f64;
        let mut acc = f(0.0) + f(a);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(h * i as f64);
        }
        let head = acc * h / 3.0;
        // ∫_A^∞ v^{-1-2rho} = A^{-2rho}/(2rho); ∫_A^∞ cos v v^{-1-2rho} ≈ -sin A A^{-1-2rho}.
        let tail = a.powf(-2.0 * rho) / (2.0 * rho) + a.sin() * a.powf(-1.0 - 2.0 * rho);
        head + tail
    }

    #[test]
    fn helix_constant_half_is_half_pi() {
        let q = quadrature_constant(0.5);
        assert!(
            (q - std::f64::consts::FRAC_PI_2).abs() < 1e-6,
            "quadrature {q}"
        );
        assert!((helix_constant(0.5) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((helix_constant(0.5) - q).abs() < 1e-6);
    }

    #[test]
    fn helix_constant_matches_quadrature_off_center() {
        for rho in [0.25, 0.4] {
            let q = quadrature_constant(rho);
            let c = helix_constant(rho);
            assert!((q - c).abs() / c < 1e-3, "rho {rho}: quadrature {q} vs {c}");
        }
    }

    #[test]
    fn reference_map_passes_audit() {
        let map = SnowflakeMap::build(0.5, 0.1, 0.01, 100.0).unwrap();
        let audit = map.audit(10_000);
        assert!(audit.max_ratio <= 1.1, "{audit:?}");
        assert!(audit.min_ratio >= 1.0 / 1.1, "{audit:?}");
        let d = (&map.eval(1.0), &map.eval(0.0));
        let dist =
            d.0.iter()
                .zip(d.1)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
        assert!((1.0 / 1.1..=1.1).contains(&dist), "dist {dist}");
    }

    #[test]
    fn map_invariants_hold() {
        let map = SnowflakeMap::build(0.3, 0.05, 0.5, 2.0e3).unwrap();
        assert_eq!(map.dim(), 2 * map.num_frequencies());
        let f = map.frequencies();
        let q = f[1] / f[0];
        for w in f.windows(2) {
            assert!(w[1] > w[0]);
            assert!(((w[1] / w[0]) - q).abs() / q < 1e-12);
        }
        assert!(map.amplitudes().iter().all(|&a| a > 0.0));
        assert!(map.calibration() > 0.0);
        assert!(map.audit(AUDIT_SAMPLES).within(0.05));
    }

    #[test]
    fn zero_difference_has_zero_distance() {
        let map = SnowflakeMap::build(0.75, 0.1, 1e-3, 10.0).unwrap();
        assert_eq!(map.distance(0.0), 0.0);
        let x = map.eval(3.25);
        assert_eq!(x, map.eval(3.25));
    }

    #[test]
    fn single_frequency_audit_detects_failure() {
        let window = FrequencyWindow::for_target(0.5, 0.1);
        let map = SnowflakeMap::discretize(0.5, 0.1, 0.01, 100.0, window, 1).unwrap();
        let audit = map.audit(1000);
        assert!(audit.spread() > 10.0 * 1.1, "{audit:?}");
        assert!(!audit.within(0.1));
    }

    #[test]
    fn two_sample_audit_hits_endpoints() {
        let map = SnowflakeMap::build(0.5, 0.1, 0.01, 100.0).unwrap();
        let audit = map.audit(2);
        let at = |u: f64| map.distance(u) / u.sqrt();
        let (lo, hi) = (at(0.01), at(100.0));
        assert_eq!(audit.min_ratio, lo.min(hi));
        assert_eq!(audit.max_ratio, lo.max(hi));
        let mut us = [audit.argmin_u, audit.argmax_u];
        us.sort_by(f64::total_cmp);
        assert_eq!(us, [0.01, 100.0]);
    }

    #[test]
    fn eval_matches_closed_form_on_random_pairs() {
        let map = SnowflakeMap::build(0.5, 0.1, 0.01, 100.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x: f64 = rng.random_range(-20.0..20.0);
            let u = (rng.random_range(0.01f64.ln()..100f64.ln())).exp();
            let u = if rng.random::<bool>() { u } else { -u };
            let y = x - u;
            let (a, b) = (map.eval(x), map.eval(y));
            let direct = a
                .iter()
                .zip(&b)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            let closed = map.distance(x - y);
            assert!(
                (direct - closed).abs() <= 1e-10 * closed,
                "{direct} vs {closed}"
            );
        }
    }

    #[test]
    fn doubling_frequencies_does_not_widen_spread() {
        for (rho, ratio) in [
            (0.25, 1e4),
            (0.5, 1e4),
            (0.75, 1e4),
            (0.5, 10.0),
            (0.1, 1e6),
        ] {
            let window = FrequencyWindow::for_target(rho, 0.1);
            let mut n = initial_frequency_count(&window, 1.0, ratio);
            let mut prev = f64::INFINITY;
            for _ in 0..4 {
                let map = SnowflakeMap::discretize(rho, 0.1, 1.0, ratio, window, n).unwrap();
                let spread = map.audit(2000).spread();
                assert!(
                    spread <= prev + 1e-9,
                    "rho {rho} ratio {ratio} J {n}: {spread} > {prev}"
                );
                prev = spread;
                n *= 2;
            }
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        for (rho, eps, lo, hi) in [
            (0.0, 0.1, 1.0, 2.0),
            (1.0, 0.1, 1.0, 2.0),
            (1.5, 0.1, 1.0, 2.0),
            (0.5, 0.0, 1.0, 2.0),
            (0.5, f64::NAN, 1.0, 2.0),
            (0.5, 0.1, 0.0, 2.0),
            (0.5, 0.1, 10.0, 1.0),
            (0.5, 0.1, 1.0, 1.0),
            (0.5, 0.1, 1.0, f64::INFINITY),
        ] {
            let err = SnowflakeMap::build(rho, eps, lo, hi).unwrap_err();
            assert!(err.is_validation(), "{err}");
        }
    }

    #[test]
    fn build_is_scale_covariant_in_dimension() {
        let a = SnowflakeMap::build(0.5, 0.1, 1.0, 1e4).unwrap();
        let b = SnowflakeMap::build(0.5, 0.1, 1e-3, 10.0).unwrap();
        assert_eq!(a.dim(), b.dim());
    }

    #[test]
    fn log_grid_endpoints_are_exact() {
        let g = log_grid(0.01, 100.0, 5);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[4], 100.0);
        assert!((g[2] - 1.0).abs() < 1e-14);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn summary_reconstructs_map() {
        let map = SnowflakeMap::build(0.25, 0.1, 0.1, 1e3).unwrap();
        let s = map.summary();
        let json = serde_json::to_string(&s).unwrap();
        let back: SnowflakeSummary = serde_json::from_str(&json).unwrap();
        let window = FrequencyWindow {
            theta_low: back.theta_low,
            theta_high: back.theta_high,
        };
        let rebuilt = SnowflakeMap::discretize(
            back.rho,
            back.eps,
            back.u_min,
            back.u_max,
            window,
            back.frequencies,
        )
        .unwrap();
        assert_eq!(rebuilt, map);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn distance_is_even(u in -1.0e3f64..1.0e3) {
            let map = SnowflakeMap::build(0.5, 0.1, 0.01, 100.0).unwrap();
            prop_assert_eq!(map.distance(u), map.distance(-u));
        }

        // Dyadic inputs make x + h exact, isolating the map from input rounding.
        #[test]
        fn translation_invariant(xi in -1i64 << 24..1i64 << 24, yi in -1i64 << 24..1i64 << 24,
                                 hi in -1i64 << 24..1i64 << 24) {
            let map = SnowflakeMap::build(0.5, 0.1, 0.01, 100.0).unwrap();
            let scale = (2.0f64).powi(-20);
            let (x, y, h) = (xi as f64 * scale, yi as f64 * scale, hi as f64 * scale);
            prop_assume!((x - y).abs() >= 0.01);
            let d = |a: f64, b: f64| {
                let (p, q) = (map.eval(a), map.eval(b));
                p.iter().zip(&q).map(|(s, t)| (s - t) * (s - t)).sum::<f64>().sqrt()
            };
            let base = d(x, y);
            let moved = d(x + h, y + h);
            prop_assert!((base - moved).abs() <= 1e-12 * base, "{} vs {}", base, moved);
        }
    }
}
