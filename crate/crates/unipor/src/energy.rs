//! The per-step objective of the implicit scheme and its first-order data.
//!
//! One time step from `u_n` minimizes, over the obstacle set `{u >= u_n}`,
//!
//! ```text
//!     J(u) = mu * int tau * gamma_hat((u - u_n)/tau)
//!          + (1/tau) int beta_hat(u)
//!          + (lambda/2) ||grad u||^2
//!          - int gamma_hat(u)
//!          - (1/tau) int beta(u_n) u,
//! ```
//!
//! with the obstacle handled as a hard feasibility test (the indicator
//! term), not a penalty. For `1 < p < 2` the first term is replaced by
//! `(mu / 2 tau) int (u - u_n)^2` (linear regularization).
//!
//! The Euler-Lagrange residual solved for the constraint multiplier,
//!
//! ```text
//!     xi = lambda * Lap u + gamma(u) - mu * gamma((u - u_n)/tau)
//!        - (beta(u) - beta(u_n)) / tau,
//! ```
//!
//! equals minus the gradient of `J` exactly (the Laplacian and the
//! Dirichlet energy come from the grid's summation-by-parts pair).
//!
//! `J` is nonconvex (the `-int gamma_hat(u)` term), so boundedness from
//! below needs the step-size condition `mu * tau^(1-p) >= p`; see
//! [`StepProblem::tau_is_coercive`].

use crate::grid::{Field, Grid1D};
use crate::model::{self, ModelParams};
use crate::{Error, Result};

/// Which regularization the step functional uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `mu * gamma(du/dt)` term, used for `p >= 2`.
    GammaRegularized,
    /// `mu * du/dt` term, used for `1 < p < 2` where `gamma` is sublinear.
    LinearRegularized,
}

/// Frozen data of one time step.
#[derive(Debug, Clone)]
pub struct StepProblem {
    pub grid: Grid1D,
    pub u_prev: Field,
    pub tau: f64,
    pub params: ModelParams,
    pub variant: Variant,
}

impl StepProblem {
    /// Builds a step problem; the variant is derived from `p`.
    ///
    /// Requires `tau > 0` and `u_prev > 0` in every cell (strong-mode
    /// positivity; degenerate data must be shifted before stepping).
    pub fn new(grid: Grid1D, u_prev: Field, tau: f64, params: ModelParams) -> Result<Self> {
        if u_prev.len() != grid.n_cells() {
            return Err(Error::SizeMismatch { expected: grid.n_cells(), got: u_prev.len() });
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("tau must be positive, got {tau}")));
        }
        if !(u_prev.min_value() > 0.0) {
            return Err(Error::Domain("u_prev must be strictly positive".into()));
        }
        let variant = if params.small_p_variant() {
            Variant::LinearRegularized
        } else {
            Variant::GammaRegularized
        };
        Ok(Self { grid, u_prev, tau, params, variant })
    }

    /// Step-size coercivity guard: with the power family, the condition
    /// `(1/p) tau^(1-p) >= 1/mu` guarantees that the `mu`-term dominates
    /// `-int gamma_hat(u)` along feasible rays, so `J` is bounded below.
    /// The linear-regularized variant is quadratically coercive for any
    /// `tau` since `gamma_hat` grows slower than quadratically.
    pub fn tau_is_coercive(&self) -> bool {
        match self.variant {
            Variant::GammaRegularized => {
                self.params.mu * self.tau.powf(1.0 - self.params.p) >= self.params.p
            }
            Variant::LinearRegularized => true,
        }
    }

    fn check_size(&self, u: &Field) -> Result<()> {
        if u.len() == self.u_prev.len() {
            Ok(())
        } else {
            Err(Error::SizeMismatch { expected: self.u_prev.len(), got: u.len() })
        }
    }

    fn check_feasible(&self, u: &Field) -> Result<()> {
        self.check_size(u)?;
        for i in 0..u.len() {
            if u[i] < self.u_prev[i] || u[i] <= 0.0 {
                return Err(Error::Domain(format!(
                    "infeasible field: u[{i}] = {} below obstacle {}",
                    u[i], self.u_prev[i]
                )));
            }
        }
        Ok(())
    }
}

/// Value of the step functional; `+inf` when the obstacle is violated.
pub fn j_value(prob: &StepProblem, u: &Field) -> Result<f64> {
    prob.check_size(u)?;
    let p = prob.params.p;
    let alpha = prob.params.alpha;
    let mu = prob.params.mu;
    let tau = prob.tau;
    let h = prob.grid.h();

    let mut acc = 0.0;
    for i in 0..u.len() {
        let ui = u[i];
        let upi = prob.u_prev[i];
        if ui < upi {
            return Ok(f64::INFINITY);
        }
        let rate = (ui - upi) / tau;
        let reg = match prob.variant {
            Variant::GammaRegularized => mu * tau * model::gamma_hat_raw(p, rate),
            Variant::LinearRegularized => 0.5 * mu * tau * rate * rate,
        };
        acc += reg + model::beta_hat_raw(alpha, ui) / tau
            - model::gamma_hat_raw(p, ui)
            - model::beta_raw(alpha, upi) * ui / tau;
    }
    Ok(acc * h + 0.5 * prob.params.lambda * prob.grid.dirichlet_energy(u)?)
}

/// `J(u) - J(u_prev)` up to the Dirichlet part, evaluated in the Bregman
/// form
///
/// ```text
///     sum_i h [ mu tau gamma_hat(r_i)
///             + (beta_hat(u_i) - beta_hat(up_i) - beta(up_i)(u_i - up_i)) / tau
///             - (gamma_hat(u_i) - gamma_hat(up_i)) ]
///     + (lambda/2) ||grad u||^2,
/// ```
///
/// which differs from [`j_value`] by a constant in `u`. The large
/// `O(1/tau)` terms of the literal formula cancel analytically here, so
/// line-search comparisons stay meaningful down to the solver tolerance.
/// Returns `+inf` when the obstacle is violated.
pub(crate) fn j_value_shifted(prob: &StepProblem, u: &Field) -> f64 {
    j_value_shifted_with_mag(prob, u).0
}

/// Returns the shifted value together with the sum of absolute per-cell
/// contributions, which bounds the floating-point noise of the value
/// (times machine epsilon); the optimizer's line search needs that bound
/// to recognize when a comparison is below measurement precision.
pub(crate) fn j_value_shifted_with_mag(prob: &StepProblem, u: &Field) -> (f64, f64) {
    let p = prob.params.p;
    let alpha = prob.params.alpha;
    let mu = prob.params.mu;
    let tau = prob.tau;
    let h = prob.grid.h();

    let mut acc = 0.0;
    let mut mag = 0.0;
    for i in 0..u.len() {
        let ui = u[i];
        let upi = prob.u_prev[i];
        if ui < upi {
            return (f64::INFINITY, f64::INFINITY);
        }
        let rate = (ui - upi) / tau;
        let reg = match prob.variant {
            Variant::GammaRegularized => mu * tau * model::gamma_hat_raw(p, rate),
            Variant::LinearRegularized => 0.5 * mu * tau * rate * rate,
        };
        let bregman = model::beta_hat_bregman(alpha, upi, ui) / tau;
        let growth = model::gamma_hat_diff(p, upi, ui);
        acc += reg + bregman - growth;
        mag += reg + bregman + growth; // all three are non-negative
    }
    let dirichlet = 0.5 * prob.params.lambda * prob.grid.dirichlet_energy(u).expect("size checked");
    (acc * h + dirichlet, mag * h + dirichlet)
}

/// Gradient of `J` in the L2 sense: the returned field `g` satisfies
/// `dJ = sum_i g_i du_i h`, i.e. the Euclidean gradient is `h * g`.
///
/// Requires `u` feasible (`u >= u_prev > 0` componentwise).
pub fn j_gradient(prob: &StepProblem, u: &Field) -> Result<Field> {
    prob.check_feasible(u)?;
    Ok(j_gradient_unchecked(prob, u))
}

pub(crate) fn j_gradient_unchecked(prob: &StepProblem, u: &Field) -> Field {
    let p = prob.params.p;
    let alpha = prob.params.alpha;
    let mu = prob.params.mu;
    let lambda = prob.params.lambda;
    let tau = prob.tau;
    let lap = prob.grid.laplacian_neumann(u).expect("size checked");
    let mut g = vec![0.0; u.len()];
    for i in 0..u.len() {
        let ui = u[i];
        let upi = prob.u_prev[i];
        let rate = (ui - upi) / tau;
        let reg = match prob.variant {
            Variant::GammaRegularized => mu * model::gamma_raw(p, rate),
            Variant::LinearRegularized => mu * rate,
        };
        g[i] = reg + model::beta_diff(alpha, upi, ui) / tau
            - lambda * lap[i]
            - model::gamma_raw(p, ui);
    }
    Field::new(g)
}

/// The multiplier candidate: `xi = -j_gradient(u)` entrywise. At a true
/// minimizer `xi` vanishes where the obstacle is slack and is `<= 0` where
/// it binds.
pub fn el_residual(prob: &StepProblem, u: &Field) -> Result<Field> {
    let g = j_gradient(prob, u)?;
    Ok(Field::new(g.values.iter().map(|&x| -x).collect()))
}

/// The lattice defect `J^{a0}(a ^ b) + J^{b0}(a v b) - J^{a0}(a) - J^{b0}(b)`
/// for ordered obstacles `a0 <= b0`. Submodularity of the step functional
/// makes this `<= 0` (up to rounding) whenever the right side is finite,
/// which is what the variational comparison principle rests on.
pub fn submodularity_gap(
    prob_a: &StepProblem,
    prob_b: &StepProblem,
    a: &Field,
    b: &Field,
) -> Result<f64> {
    if prob_a.grid != prob_b.grid {
        return Err(Error::Input("submodularity_gap: mismatched grids".into()));
    }
    if prob_a.tau != prob_b.tau || prob_a.params != prob_b.params {
        return Err(Error::Input("submodularity_gap: step data must share tau and params".into()));
    }
    if !prob_a.u_prev.le(&prob_b.u_prev) {
        return Err(Error::Input("submodularity_gap: obstacles must satisfy a0 <= b0".into()));
    }
    let ja = j_value(prob_a, a)?;
    let jb = j_value(prob_b, b)?;
    if !ja.is_finite() || !jb.is_finite() {
        // The inequality is vacuous against an infinite right side.
        return Ok(f64::NEG_INFINITY);
    }
    let meet = j_value(prob_a, &a.inf(b))?;
    let join = j_value(prob_b, &a.sup(b))?;
    Ok(meet + join - ja - jb)
}
