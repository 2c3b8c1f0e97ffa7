//! Constant-in-space reference solutions and the blow-up-time quadrature.
//!
//! Two scalar problems bracket the PDE evolution:
//!
//! ```text
//!     d/dt beta(z) = gamma(z),  z(0) = M      (the limit envelope),
//!     mu gamma(z') + d/dt beta(z) = gamma(z), z(0) = delta
//!                                             (the regularized envelope),
//! ```
//!
//! where the second uses `mu z'` instead of `mu gamma(z')` for `1 < p < 2`,
//! matching the step functional's regularization.
//!
//! The limit problem is integrated in the variable `v = beta(z)`, where it
//! becomes `v' = gamma(beta_inverse(v))`; this removes the `beta'`
//! singularity and any stiffness from the substitution itself. The life
//! span of the limit envelope has the closed form
//!
//! ```text
//!     T_hat(M) = integral_{beta(M)}^{inf} db / gamma(beta_inverse(b))
//!              = M^(2-alpha-p) / (p + alpha - 2)   if p + alpha > 2,
//!              = +inf                              otherwise,
//! ```
//!
//! handled by [`blowup_time`]; numeric quadrature serves as a cross-check
//! in the tests, not the other way round.

use crate::model::{self, ModelParams};
use crate::{Error, Result};

/// Threshold above which a scalar trajectory counts as blown up.
pub const ODE_BLOWUP_CAP: f64 = 1e9;

/// A scalar reference trajectory; values are strictly increasing since
/// `gamma > 0` on positives.
#[derive(Debug, Clone)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub blown_up: bool,
    pub blowup_time: Option<f64>,
}

impl OdeTrajectory {
    /// Linear interpolation; `None` outside the computed range.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if self.times.is_empty() || t < self.times[0] || t > *self.times.last().unwrap() {
            return None;
        }
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => Some(self.values[i]),
            Err(i) => {
                let (t0, t1) = (self.times[i - 1], self.times[i]);
                let (v0, v1) = (self.values[i - 1], self.values[i]);
                Some(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
            }
        }
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Right side of the substituted limit equation, `gamma(beta_inverse(v))`;
/// `None` when `v` leaves the range of `beta` (can only happen inside a
/// trial Runge-Kutta stage near the singularity).
fn limit_rhs(params: &ModelParams, v: f64) -> Option<f64> {
    let a = params.alpha;
    let z = if a == 1.0 {
        v.exp()
    } else {
        let scaled = (1.0 - a) * v;
        if !(scaled > 0.0) {
            return None;
        }
        scaled.powf(1.0 / (1.0 - a))
    };
    Some(model::gamma_raw(params.p, z))
}

/// Integrates `d/dt beta(z) = gamma(z)` from `z0` with classical
/// four-stage Runge-Kutta in the variable `v = beta(z)`, halving the step
/// whenever a stage leaves the admissible range or `|dv| > 0.1 |v|`.
/// Stops at `t_end` or at the blow-up cap, whose crossing time is refined
/// by bisection inside the offending step.
pub fn solve_ode_limit(params: &ModelParams, z0: f64, t_end: f64, dt: f64) -> Result<OdeTrajectory> {
    if !(z0 > 0.0) {
        return Err(Error::Domain(format!("ODE initial value must be positive, got {z0}")));
    }
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::Domain("t_end and dt must be positive".into()));
    }
    let rhs = |v: f64| limit_rhs(params, v);
    let v0 = model::beta_raw(params.alpha, z0);
    let back = |v: f64| params.beta_inverse(v).ok();
    integrate_scalar(v0, t_end, dt, rhs, back)
}

/// Integrates the regularized envelope `mu gamma(z') + d/dt beta(z) =
/// gamma(z)` (with `mu z'` for `1 < p < 2`). Each step solves the strictly
/// monotone scalar equation for the rate `r = z'` by bisection on the
/// bracket `[0, gamma(z)/beta'(z)]` and advances `z` by explicit midpoint;
/// the rate is non-negative by construction.
pub fn solve_ode_regularized(
    params: &ModelParams,
    z0: f64,
    mu: f64,
    t_end: f64,
    dt: f64,
) -> Result<OdeTrajectory> {
    if !(z0 > 0.0) {
        return Err(Error::Domain(format!("ODE initial value must be positive, got {z0}")));
    }
    if !(mu > 0.0) {
        return Err(Error::Domain("regularized envelope needs mu > 0".into()));
    }
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::Domain("t_end and dt must be positive".into()));
    }
    let small_p = params.small_p_variant();
    let rate = |z: f64| -> Option<f64> {
        let g = model::gamma_raw(params.p, z);
        let bp = model::beta_prime_raw(params.alpha, z);
        if small_p {
            return Some(g / (mu + bp));
        }
        // mu gamma(r) + bp r = g, increasing in r; bracket holds because
        // the left side at r = g/bp is already >= g.
        let mut lo = 0.0f64;
        let mut hi = g / bp;
        if !(hi.is_finite()) {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let val = mu * model::gamma_raw(params.p, mid) + bp * mid - g;
            if val > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    };
    // Midpoint advance expressed through the generic driver by treating z
    // itself as the integrated variable.
    let step = move |z: f64, h: f64| -> Option<f64> {
        let r1 = rate(z)?;
        let zm = z + 0.5 * h * r1;
        let r2 = rate(zm)?;
        Some(z + h * r2)
    };
    integrate_with(z0, t_end, dt, step, |z| Some(z))
}

fn integrate_scalar(
    v0: f64,
    t_end: f64,
    dt: f64,
    rhs: impl Fn(f64) -> Option<f64>,
    back: impl Fn(f64) -> Option<f64>,
) -> Result<OdeTrajectory> {
    let step = move |v: f64, h: f64| -> Option<f64> {
        let k1 = rhs(v)?;
        let k2 = rhs(v + 0.5 * h * k1)?;
        let k3 = rhs(v + 0.5 * h * k2)?;
        let k4 = rhs(v + h * k3)?;
        Some(v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    };
    integrate_with(v0, t_end, dt, step, back)
}

/// Shared adaptive driver: `step(state, h)` proposes one advance, `back`
/// maps the integrated variable to `z` (`None` outside the admissible
/// range, which rejects the proposal).
fn integrate_with(
    s0: f64,
    t_end: f64,
    dt_max: f64,
    step: impl Fn(f64, f64) -> Option<f64>,
    back: impl Fn(f64) -> Option<f64>,
) -> Result<OdeTrajectory> {
    let z0 = back(s0).expect("initial state is admissible");
    let mut times = vec![0.0];
    let mut values = vec![z0];
    let mut s = s0;
    let mut z_now = z0;
    let mut t = 0.0;
    let mut dt = dt_max;
    let dt_min = dt_max * 2f64.powi(-48);
    let mut blown_up = false;
    let mut blowup_time = None;

    while t < t_end && !blown_up {
        let h = dt.min(t_end - t);
        let proposal = step(s, h);
        // Relative 10% control on z itself; the substituted variable can
        // cross zero (beta changes sign), where a relative test would
        // degenerate.
        let z_next = proposal.filter(|p| p.is_finite()).and_then(&back);
        let accept = match z_next {
            Some(zn) => (zn - z_now).abs() <= 0.1 * z_now || h <= dt_min,
            None => false,
        };
        if !accept {
            if dt <= dt_min {
                // The state explodes faster than the step can shrink:
                // declare blow-up here.
                blown_up = true;
                blowup_time = Some(t);
                break;
            }
            dt *= 0.5;
            continue;
        }
        let (next, zn) = (proposal.unwrap(), z_next.unwrap());
        if zn >= ODE_BLOWUP_CAP {
            // Refine the cap crossing by bisection inside this step.
            let mut lo = 0.0;
            let mut hi = h;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let below = step(s, mid)
                    .filter(|p| p.is_finite())
                    .and_then(&back)
                    .map(|z| z < ODE_BLOWUP_CAP)
                    .unwrap_or(false);
                if below {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t_cross = t + hi;
            let z_cross = step(s, lo).and_then(&back).unwrap_or(zn);
            times.push(t_cross);
            values.push(z_cross.min(ODE_BLOWUP_CAP));
            blown_up = true;
            blowup_time = Some(t_cross);
            break;
        }
        s = next;
        z_now = zn;
        t += h;
        times.push(t);
        values.push(zn);
        dt = (dt * 2.0).min(dt_max);
    }

    Ok(OdeTrajectory { times, values, blown_up, blowup_time })
}

/// Life span of the limit envelope started at `M`: the closed form of the
/// improper integral for the power family. Returns `+inf` when
/// `p + alpha <= 2` (sublinear composite growth).
pub fn blowup_time(params: &ModelParams, m: f64) -> f64 {
    assert!(m > 0.0, "blowup_time needs M > 0");
    let q = params.p + params.alpha - 2.0;
    if q > 0.0 {
        m.powf(-q) / q
    } else {
        f64::INFINITY
    }
}
