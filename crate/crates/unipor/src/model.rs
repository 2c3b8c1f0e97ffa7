//! The power-law nonlinearity pair and its derived scalar functions.
//!
//! The model is the family
//!
//! ```text
//!     gamma(s) = s^(p-1)                      (p > 1, s >= 0),
//!     beta(s)  = s^(1-alpha) / (1-alpha)      (alpha >= 0, alpha != 1),
//!     beta(s)  = log s                        (alpha = 1),
//! ```
//!
//! so `beta'(s) = s^(-alpha)` is positive and non-increasing on `(0, inf)`
//! and `gamma` is monotone with `gamma(s) = 0` iff `s = 0`. Every derived
//! quantity the solver needs (primitives, the inverse of `beta`, the
//! square-root primitive `B`) has a closed form, which is what this module
//! evaluates. [`validate_assumptions`] double-checks the growth and
//! monotonicity requirements numerically on a sample grid, so it acts as a
//! safety net rather than a gatekeeper.
//!
//! Custom non-power pairs (a general monotone graph `beta`, non-power
//! `gamma`) are out of scope; an inverse for such pairs would fall back to
//! bisection, but nothing in the power family needs it.

use crate::{Error, Result};

/// Parameters of the nonlinearity pair plus the diffusion and
/// regularization coefficients.
///
/// Invariants, enforced by [`ModelParams::new`]: `p > 1` (in 1D any
/// exponent above 1 is admissible), `alpha >= 0`, `lambda > 0`, `mu >= 0`
/// (`mu = 0` denotes the unregularized limit problem).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Growth exponent of `gamma`.
    pub p: f64,
    /// Singularity exponent of `beta'`.
    pub alpha: f64,
    /// Diffusion coefficient multiplying both the Laplacian and the
    /// Dirichlet energy.
    pub lambda: f64,
    /// Regularization strength.
    pub mu: f64,
}

/// `beta`, `beta'` and a primitive of `beta`, evaluated at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBundle {
    pub beta: f64,
    pub beta_prime: f64,
    /// Primitive of `beta`. For `alpha < 2` this is the integral of `beta`
    /// from 0, which converges and vanishes at 0. For `alpha >= 2` that
    /// integral diverges at the lower end, so the natural antiderivative is
    /// returned instead (`-log s` at `alpha = 2`); it differs from any
    /// cutoff integral by an additive constant, which no minimization or
    /// difference in this crate is sensitive to.
    pub beta_hat: f64,
}

impl ModelParams {
    pub fn new(p: f64, alpha: f64, lambda: f64, mu: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!("p must exceed 1, got {p}")));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("mu must be >= 0, got {mu}")));
        }
        Ok(Self { p, alpha, lambda, mu })
    }

    /// Same parameters with a different regularization strength.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.p, self.alpha, self.lambda, mu)
    }

    /// True when the step functional uses the linear regularization
    /// `mu * du/dt` instead of `mu * gamma(du/dt)` (the `1 < p < 2` case).
    pub fn small_p_variant(&self) -> bool {
        self.p < 2.0
    }

    /// `gamma(s) = s^(p-1)` for `s >= 0`.
    pub fn gamma(&self, s: f64) -> Result<f64> {
        require_nonnegative(s, "gamma")?;
        Ok(gamma_raw(self.p, s))
    }

    /// Primitive of `gamma`: `s^p / p`.
    pub fn gamma_hat(&self, s: f64) -> Result<f64> {
        require_nonnegative(s, "gamma_hat")?;
        Ok(gamma_hat_raw(self.p, s))
    }

    /// `beta`, `beta'`, and the `beta` primitive at `s > 0`.
    ///
    /// `beta'(s) = s^(-alpha)` is singular at 0 for `alpha > 0` and is
    /// returned as-is; callers in strong mode guarantee `s >= delta > 0`.
    pub fn beta_bundle(&self, s: f64) -> Result<BetaBundle> {
        require_positive(s, "beta_bundle")?;
        Ok(BetaBundle {
            beta: beta_raw(self.alpha, s),
            beta_prime: beta_prime_raw(self.alpha, s),
            beta_hat: beta_hat_raw(self.alpha, s),
        })
    }

    /// `beta(s)` alone.
    pub fn beta(&self, s: f64) -> Result<f64> {
        require_positive(s, "beta")?;
        Ok(beta_raw(self.alpha, s))
    }

    /// Inverse of `beta` on its open range: `(0, inf)` for `alpha < 1`,
    /// all of `R` for `alpha = 1`, `(-inf, 0)` for `alpha > 1`.
    pub fn beta_inverse(&self, b: f64) -> Result<f64> {
        let a = self.alpha;
        if a == 1.0 {
            return Ok(b.exp());
        }
        let scaled = (1.0 - a) * b;
        if !(scaled > 0.0) {
            return Err(Error::Domain(format!(
                "beta_inverse: {b} is outside the range of beta for alpha = {a}"
            )));
        }
        Ok(scaled.powf(1.0 / (1.0 - a)))
    }

    /// `B(s)`, the primitive of `sqrt(beta')`: `s^(1-alpha/2) / (1-alpha/2)`.
    ///
    /// Requires `alpha < 2` (otherwise `sqrt(beta')` is not locally
    /// integrable at 0 and the weak mode is unavailable).
    pub fn beta_sqrt_primitive(&self, s: f64) -> Result<f64> {
        if self.alpha >= 2.0 {
            return Err(Error::Unsupported(format!(
                "B(s) needs alpha < 2, got alpha = {}",
                self.alpha
            )));
        }
        require_nonnegative(s, "beta_sqrt_primitive")?;
        let e = 1.0 - self.alpha / 2.0;
        Ok(s.powf(e) / e)
    }
}

fn require_nonnegative(s: f64, what: &str) -> Result<()> {
    if s >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what}: argument must be >= 0, got {s}")))
    }
}

fn require_positive(s: f64, what: &str) -> Result<()> {
    if s > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what}: argument must be > 0, got {s}")))
    }
}

// Unchecked closed forms. The hot loops in `energy` and `optimizer` call
// these directly after validating feasibility once per field.

#[inline]
pub(crate) fn gamma_raw(p: f64, s: f64) -> f64 {
    s.powf(p - 1.0)
}

#[inline]
pub(crate) fn gamma_hat_raw(p: f64, s: f64) -> f64 {
    s.powf(p) / p
}

/// `gamma'(s) = (p-1) s^(p-2)`; only evaluated with `p >= 2` (curvature
/// estimates for the gamma-regularized variant).
#[inline]
pub(crate) fn gamma_prime_raw(p: f64, s: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        (p - 1.0) * s.powf(p - 2.0)
    }
}

#[inline]
pub(crate) fn beta_raw(alpha: f64, s: f64) -> f64 {
    if alpha == 1.0 {
        s.ln()
    } else {
        s.powf(1.0 - alpha) / (1.0 - alpha)
    }
}

#[inline]
pub(crate) fn beta_prime_raw(alpha: f64, s: f64) -> f64 {
    s.powf(-alpha)
}

#[inline]
pub(crate) fn beta_hat_raw(alpha: f64, s: f64) -> f64 {
    if alpha == 1.0 {
        s * s.ln() - s
    } else if alpha == 2.0 {
        -s.ln()
    } else {
        s.powf(2.0 - alpha) / ((1.0 - alpha) * (2.0 - alpha))
    }
}

/// `gamma_hat(b) - gamma_hat(a)` without cancellation for `b` near `a`
/// (`0 < a <= b`): `a^p expm1(p log1p((b-a)/a)) / p`.
#[inline]
pub(crate) fn gamma_hat_diff(p: f64, a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return gamma_hat_raw(p, b);
    }
    let d = ((b - a) / a).ln_1p();
    a.powf(p) * (p * d).exp_m1() / p
}

/// `beta(b) - beta(a)` for `0 < a <= b` with error scaling like the
/// difference, not like `beta`.
#[inline]
pub(crate) fn beta_diff(alpha: f64, a: f64, b: f64) -> f64 {
    let w = (b - a) / a;
    if alpha == 1.0 {
        w.ln_1p()
    } else {
        let e = 1.0 - alpha;
        a.powf(e) * (e * w.ln_1p()).exp_m1() / e
    }
}

/// The Bregman divergence `beta_hat(b) - beta_hat(a) - beta(a)(b - a)`
/// for `0 < a <= b`, evaluated so the rounding error scales with the
/// divergence itself (about `beta'(a)(b-a)^2/2`) rather than with
/// `beta_hat`. The step objective divides this by `tau`, which would
/// amplify a naive three-term cancellation beyond the solver tolerance;
/// for small relative increments the residual series is summed directly.
#[inline]
pub(crate) fn beta_hat_bregman(alpha: f64, a: f64, b: f64) -> f64 {
    let w = (b - a) / a;
    if alpha == 1.0 {
        a * phi_log(w)
    } else if alpha == 2.0 {
        phi_recip(w)
    } else {
        let e = 2.0 - alpha;
        a.powf(e) * phi_pow(e, w) / (1.0 - alpha)
    }
}

/// `((1+w)^e - 1 - e w) / e` for `w >= 0`.
fn phi_pow(e: f64, w: f64) -> f64 {
    if w > 0.5 {
        return ((e * w.ln_1p()).exp_m1() - e * w) / e;
    }
    // sum_{k>=2} binom(e, k) w^k, term ratio w (e-k)/(k+1); terminates
    // exactly for integer e.
    let mut term = e * (e - 1.0) / 2.0 * w * w;
    let mut sum = term;
    let mut k = 2.0;
    while term.abs() > f64::EPSILON * sum.abs() && k < 500.0 {
        term *= w * (e - k) / (k + 1.0);
        sum += term;
        k += 1.0;
    }
    sum / e
}

/// `(1+w) log(1+w) - w` for `w >= 0`.
fn phi_log(w: f64) -> f64 {
    if w > 0.5 {
        return (1.0 + w) * w.ln_1p() - w;
    }
    // sum_{k>=2} (-1)^k w^k / (k (k-1))
    let mut term = 0.5 * w * w;
    let mut sum = term;
    let mut k = 2.0;
    while term.abs() > f64::EPSILON * sum.abs() && k < 500.0 {
        term *= -w * (k - 1.0) / (k + 1.0);
        sum += term;
        k += 1.0;
    }
    sum
}

/// `w - log(1+w)` for `w >= 0`.
fn phi_recip(w: f64) -> f64 {
    if w > 0.5 {
        return w - w.ln_1p();
    }
    // sum_{k>=2} (-1)^k w^k / k
    let mut term = 0.5 * w * w;
    let mut sum = term;
    let mut k = 2.0;
    while term.abs() > f64::EPSILON * sum.abs() && k < 500.0 {
        term *= -w * k / (k + 1.0);
        sum += term;
        k += 1.0;
    }
    sum
}

/// One numeric check inside a [`ValidationReport`].
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Witnessing constant (best bound observed on the sample grid).
    pub witness: f64,
    pub detail: String,
}

/// Outcome of [`validate_assumptions`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub passed: bool,
    /// Set when `1 < p < 2`, where the step functional switches to the
    /// linear regularization.
    pub small_p_variant: bool,
    pub checks: Vec<AssumptionCheck>,
}

/// Numerically verifies the growth and monotonicity assumptions on a
/// log-spaced sample grid:
///
/// - `p > 1` and `gamma(0) = 0`;
/// - a positive constant `C1` with `C1 (s^p - 1) <= gamma_hat(s)` exists;
/// - a finite `C2` with `gamma(s)^(p') <= C2 (s^p + 1)` exists, where
///   `p' = p / (p-1)`;
/// - `beta'` is positive and non-increasing.
///
/// Takes the raw exponents rather than a [`ModelParams`] so that invalid
/// parameter sets (e.g. `p <= 1`) can be *reported* as failures instead of
/// being rejected at construction.
pub fn validate_assumptions(p: f64, alpha: f64, sample_count: usize) -> ValidationReport {
    assert!(sample_count >= 2, "sample_count must be at least 2");
    let mut checks = Vec::new();

    let p_ok = p > 1.0 && p.is_finite();
    checks.push(AssumptionCheck {
        name: "p_exceeds_one",
        passed: p_ok,
        witness: p,
        detail: format!("p = {p}"),
    });

    // Log-spaced samples over ten decades around 1.
    let samples: Vec<f64> = (0..sample_count)
        .map(|i| {
            let t = i as f64 / (sample_count - 1) as f64;
            10f64.powf(-5.0 + 10.0 * t)
        })
        .collect();

    if p_ok {
        let gamma0 = gamma_raw(p, 0.0);
        checks.push(AssumptionCheck {
            name: "gamma_vanishes_only_at_zero",
            passed: gamma0 == 0.0 && samples.iter().all(|&s| gamma_raw(p, s) > 0.0),
            witness: gamma0,
            detail: "gamma(0) = 0 and gamma > 0 on positive samples".into(),
        });

        // Lower growth bound: C1 = inf gamma_hat(s) / (s^p - 1) over s with
        // s^p - 1 bounded away from 0; negative right side is trivial.
        let mut c1 = f64::INFINITY;
        for &s in &samples {
            let denom = s.powf(p) - 1.0;
            if denom > 1e-6 {
                c1 = c1.min(gamma_hat_raw(p, s) / denom);
            }
        }
        checks.push(AssumptionCheck {
            name: "gamma_hat_lower_growth",
            passed: c1 > 0.0,
            witness: c1,
            detail: format!("largest admissible C1 on samples = {c1:.6e}"),
        });

        // Upper bound on gamma^(p'): C2 = sup gamma(s)^(p') / (s^p + 1).
        let pprime = p / (p - 1.0);
        let mut c2 = 0f64;
        for &s in &samples {
            c2 = c2.max(gamma_raw(p, s).powf(pprime) / (s.powf(p) + 1.0));
        }
        checks.push(AssumptionCheck {
            name: "gamma_power_upper_bound",
            passed: c2.is_finite() && c2 > 0.0,
            witness: c2,
            detail: format!("smallest admissible C2 on samples = {c2:.6e}"),
        });
    }

    let alpha_ok = alpha >= 0.0 && alpha.is_finite();
    let mut bp_positive = alpha_ok;
    let mut bp_monotone = alpha_ok;
    if alpha_ok {
        let mut prev = f64::INFINITY;
        for &s in &samples {
            let bp = beta_prime_raw(alpha, s);
            bp_positive &= bp > 0.0;
            bp_monotone &= bp <= prev * (1.0 + 1e-12);
            prev = bp;
        }
    }
    checks.push(AssumptionCheck {
        name: "beta_prime_positive_nonincreasing",
        passed: bp_positive && bp_monotone,
        witness: alpha,
        detail: format!("beta'(s) = s^(-alpha), alpha = {alpha}"),
    });

    ValidationReport {
        passed: checks.iter().all(|c| c.passed),
        small_p_variant: p_ok && p < 2.0,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(p: f64, alpha: f64) -> ModelParams {
        ModelParams::new(p, alpha, 1.0, 0.0).unwrap()
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(ModelParams::new(1.0, 0.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(2.0, -0.5, 1.0, 0.0).is_err());
        assert!(ModelParams::new(2.0, 0.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(2.0, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn gamma_values() {
        assert_eq!(params(2.0, 0.0).gamma(0.0).unwrap(), 0.0);
        assert_eq!(params(2.0, 0.0).gamma(1.0).unwrap(), 1.0);
        assert_eq!(params(3.0, 0.0).gamma(2.0).unwrap(), 4.0);
        assert!(params(2.0, 0.0).gamma(-1.0).is_err());
    }

    #[test]
    fn gamma_hat_values() {
        assert_eq!(params(2.0, 0.0).gamma_hat(0.0).unwrap(), 0.0);
        assert_relative_eq!(params(2.0, 0.0).gamma_hat(2.0).unwrap(), 2.0);
        assert_relative_eq!(params(3.0, 0.0).gamma_hat(1.0).unwrap(), 1.0 / 3.0);
        assert!(params(2.0, 0.0).gamma_hat(-0.1).is_err());
    }

    #[test]
    fn beta_bundle_identity_case() {
        let b = params(2.0, 0.0).beta_bundle(5.0).unwrap();
        assert_eq!(b.beta, 5.0);
        assert_eq!(b.beta_prime, 1.0);
        assert_relative_eq!(b.beta_hat, 12.5);
    }

    #[test]
    fn beta_bundle_log_case() {
        let b = params(2.0, 1.0).beta_bundle(1.0).unwrap();
        assert_eq!(b.beta, 0.0);
        assert_eq!(b.beta_prime, 1.0);
        assert_relative_eq!(b.beta_hat, -1.0);
        // beta_hat(0+) = 0 for the log case.
        assert!(params(2.0, 1.0).beta_bundle(1e-12).unwrap().beta_hat.abs() < 1e-9);
    }

    #[test]
    fn beta_bundle_penrose_fife_case() {
        let b = params(2.0, 2.0).beta_bundle(2.0).unwrap();
        assert_relative_eq!(b.beta, -0.5);
        assert_relative_eq!(b.beta_prime, 0.25);
        // The primitive at alpha = 2 is -log s.
        assert_relative_eq!(b.beta_hat, -(2f64.ln()), epsilon = 1e-14);
        assert!(params(2.0, 2.0).beta_bundle(0.0).is_err());
        assert!(params(2.0, 2.0).beta_bundle(-1.0).is_err());
    }

    /// Composite Simpson oracle for integrals of beta over [a, b].
    fn integrate_beta(alpha: f64, a: f64, b: f64) -> f64 {
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut acc = beta_raw(alpha, a) + beta_raw(alpha, b);
        for i in 1..n {
            let x = a + i as f64 * h;
            acc += if i % 2 == 0 { 2.0 } else { 4.0 } * beta_raw(alpha, x);
        }
        acc * h / 3.0
    }

    #[test]
    fn beta_hat_differences_match_quadrature() {
        for &alpha in &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5] {
            let m = params(2.0, alpha);
            let d = m.beta_bundle(2.0).unwrap().beta_hat - m.beta_bundle(1.0).unwrap().beta_hat;
            let oracle = integrate_beta(alpha, 1.0, 2.0);
            assert_relative_eq!(d, oracle, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn beta_hat_vanishes_at_zero_below_alpha_two() {
        // The limit is 0 for alpha < 2 but approached like s^(2-alpha),
        // i.e. slowly when alpha is close to 2.
        for &alpha in &[0.0, 0.5, 1.0, 1.5] {
            let v = params(2.0, alpha).beta_bundle(1e-9).unwrap().beta_hat;
            assert!(v.abs() < 1e-3, "alpha = {alpha}: beta_hat(1e-9) = {v}");
            let w = params(2.0, alpha).beta_bundle(1e-12).unwrap().beta_hat;
            assert!(w.abs() < v.abs().max(1e-11), "not shrinking toward 0 for alpha = {alpha}");
        }
    }

    #[test]
    fn beta_inverse_values() {
        assert_relative_eq!(params(2.0, 0.0).beta_inverse(3.0).unwrap(), 3.0);
        assert_relative_eq!(params(2.0, 1.0).beta_inverse(0.0).unwrap(), 1.0);
        assert_relative_eq!(params(2.0, 0.5).beta_inverse(2.0).unwrap(), 1.0);
        assert_relative_eq!(params(2.0, 2.0).beta_inverse(-0.5).unwrap(), 2.0);
        assert!(params(2.0, 0.0).beta_inverse(-1.0).is_err());
        assert!(params(2.0, 2.0).beta_inverse(0.1).is_err());
    }

    #[test]
    fn beta_inverse_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &alpha in &[0.0, 0.3, 1.0, 1.7, 2.0, 2.4] {
            let m = params(2.0, alpha);
            for _ in 0..100 {
                let s = 10f64.powf(rng.gen_range(-3.0..3.0));
                let b = m.beta(s).unwrap();
                let back = m.beta_inverse(b).unwrap();
                assert_relative_eq!(back, s, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn b_function_values() {
        assert_relative_eq!(params(2.0, 0.0).beta_sqrt_primitive(4.0).unwrap(), 4.0);
        assert_relative_eq!(params(2.0, 1.0).beta_sqrt_primitive(4.0).unwrap(), 4.0);
        assert_relative_eq!(params(2.0, 1.0).beta_sqrt_primitive(1.0).unwrap(), 2.0);
        assert_eq!(params(2.0, 0.0).beta_sqrt_primitive(0.0).unwrap(), 0.0);
        assert!(matches!(
            params(2.0, 2.0).beta_sqrt_primitive(1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(p, alpha) in &[(2.0, 0.0), (3.0, 1.0), (1.5, 0.5), (2.5, 1.9)] {
            let m = params(p, alpha);
            for _ in 0..100 {
                let s = 10f64.powf(rng.gen_range(-1.0..2.0));
                let eps = s * 1e-6;
                let fd_gamma_hat =
                    (m.gamma_hat(s + eps).unwrap() - m.gamma_hat(s - eps).unwrap()) / (2.0 * eps);
                assert_relative_eq!(fd_gamma_hat, m.gamma(s).unwrap(), max_relative = 1e-6);
                let fd_b = (m.beta_sqrt_primitive(s + eps).unwrap()
                    - m.beta_sqrt_primitive(s - eps).unwrap())
                    / (2.0 * eps);
                let sqrt_bp = m.beta_bundle(s).unwrap().beta_prime.sqrt();
                assert_relative_eq!(fd_b, sqrt_bp, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn gamma_hat_midpoint_convexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &p in &[1.5, 2.0, 3.3] {
            let m = params(p, 0.0);
            for _ in 0..200 {
                let a = rng.gen_range(0.0..10.0);
                let b = rng.gen_range(0.0..10.0);
                let mid = m.gamma_hat(0.5 * (a + b)).unwrap();
                let avg = 0.5 * (m.gamma_hat(a).unwrap() + m.gamma_hat(b).unwrap());
                assert!(mid <= avg + 1e-12 * avg.abs().max(1.0));
            }
        }
    }

    #[test]
    fn monotonicity_of_gamma_and_beta_prime() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(p, alpha) in &[(2.0, 0.0), (3.0, 1.2), (1.4, 0.7)] {
            let m = params(p, alpha);
            for _ in 0..200 {
                let s1 = rng.gen_range(0.01..5.0);
                let s2 = s1 + rng.gen_range(0.001..5.0);
                assert!(m.gamma(s2).unwrap() >= m.gamma(s1).unwrap());
                let b1 = m.beta_bundle(s1).unwrap().beta_prime;
                let b2 = m.beta_bundle(s2).unwrap().beta_prime;
                assert!(b2 <= b1);
            }
        }
    }

    #[test]
    fn stable_differences_match_naive_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for &(p, alpha) in &[(2.0, 0.0), (3.0, 1.0), (1.5, 2.0), (2.5, 0.7), (2.0, 2.6)] {
            for _ in 0..200 {
                let a = 10f64.powf(rng.gen_range(-2.0..1.0));
                let b = a * (1.0 + rng.gen_range(0.0..2.0));
                let naive_g = gamma_hat_raw(p, b) - gamma_hat_raw(p, a);
                let g = gamma_hat_diff(p, a, b);
                assert_relative_eq!(g, naive_g, max_relative = 1e-9, epsilon = 1e-12);
                let naive_d = beta_raw(alpha, b) - beta_raw(alpha, a);
                assert_relative_eq!(
                    beta_diff(alpha, a, b),
                    naive_d,
                    max_relative = 1e-9,
                    epsilon = 1e-12
                );
                let naive_b = beta_hat_raw(alpha, b)
                    - beta_hat_raw(alpha, a)
                    - beta_raw(alpha, a) * (b - a);
                let br = beta_hat_bregman(alpha, a, b);
                assert!(br >= 0.0, "Bregman divergence of a convex primitive");
                assert_relative_eq!(br, naive_b, max_relative = 1e-6, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn bregman_accuracy_survives_tiny_increments() {
        // The divergence is ~ beta'(a) d^2 / 2 for small d; the series
        // evaluation must track it to relative precision where the naive
        // three-term form has already lost every digit.
        for &alpha in &[0.0, 0.5, 1.0, 2.0, 2.5] {
            for &d in &[1e-6, 1e-9, 1e-12] {
                let a = 1.7;
                let br = beta_hat_bregman(alpha, a, a + d);
                let lead = beta_prime_raw(alpha, a) * d * d / 2.0;
                assert_relative_eq!(br, lead, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn validator_accepts_canonical_family() {
        let report = validate_assumptions(2.0, 1.0, 100);
        assert!(report.passed);
        assert!(!report.small_p_variant);
    }

    #[test]
    fn validator_flags_small_p() {
        let report = validate_assumptions(1.5, 0.0, 100);
        assert!(report.passed);
        assert!(report.small_p_variant);
    }

    #[test]
    fn validator_rejects_p_below_one() {
        let report = validate_assumptions(0.5, 0.0, 100);
        assert!(!report.passed);
        assert!(report.checks.iter().any(|c| c.name == "p_exceeds_one" && !c.passed));
    }
}
