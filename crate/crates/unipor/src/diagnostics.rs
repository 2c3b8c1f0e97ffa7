//! Executable forms of the provable statements: envelope sandwich bounds,
//! the lattice-coupled comparison principle, the multiplier law, the
//! free-boundary freeze, and the weak-form inequalities for degenerate
//! data.
//!
//! Every check is a pure function of recorded trajectory data, so reports
//! are reproducible bit for bit. Discrete time integrals use the snapshot
//! spacing of the trajectory; tolerances are budgeted as `O(tau)` times
//! the recorded magnitudes (calibrated on the constant-data linear case,
//! where both sides have closed forms), plus the explicit `mu`-term where
//! the regularization enters with the unfavorable sign.

use crate::energy::{self, StepProblem};
use crate::grid::{Field, Grid1D};
use crate::model::{self, ModelParams};
use crate::ode_ref;
use crate::optimizer;
use crate::stepper::{RunConfig, Trajectory};
use crate::{Error, Result};

/// Outcome of one diagnostic; `passed` holds exactly when
/// `worst_violation <= tolerance_used`.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    /// `(step index, cell index)` of the worst violation, when meaningful.
    pub location: Option<(usize, usize)>,
    pub tolerance_used: f64,
    pub detail: String,
}

impl CheckReport {
    fn new(
        name: &str,
        worst_violation: f64,
        location: Option<(usize, usize)>,
        tolerance_used: f64,
        detail: String,
    ) -> Self {
        Self {
            name: name.to_string(),
            passed: worst_violation <= tolerance_used,
            worst_violation,
            location,
            tolerance_used,
            detail,
        }
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} worst_violation={:.6e} tolerance={:.6e}{}",
            self.name,
            if self.passed { "pass" } else { "FAIL" },
            self.worst_violation,
            self.tolerance_used,
            match self.location {
                Some((s, c)) => format!(" at (step {s}, cell {c})"),
                None => String::new(),
            }
        )
    }
}

/// Verifies the envelope sandwich `z_delta_mu(t) <= min u <= max u <=
/// z_M(t)` at every recorded snapshot, with the upper check applied while
/// the limit envelope is still finite. `params.mu` is the regularization
/// level of the lower envelope; pass the trajectory's own parameters for a
/// faithful comparison.
pub fn check_sandwich(
    traj: &Trajectory,
    params: &ModelParams,
    delta: f64,
    m: f64,
    tol: f64,
) -> Result<CheckReport> {
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| Error::Input("trajectory has no snapshots".into()))?;
    if !(delta > 0.0) || delta > first.u.min_value() * (1.0 + 1e-12) {
        return Err(Error::Input(format!(
            "delta = {delta} must satisfy 0 < delta <= min u0 = {}",
            first.u.min_value()
        )));
    }
    if m < first.u.max_value() * (1.0 - 1e-12) {
        return Err(Error::Input(format!(
            "M = {m} must dominate max u0 = {}",
            first.u.max_value()
        )));
    }
    if traj.snapshots.len() < 2 {
        return Err(Error::Input("sandwich check needs at least two snapshots".into()));
    }

    let t_final = traj.snapshots.last().unwrap().time;
    let dt = traj
        .snapshots
        .windows(2)
        .map(|w| w[1].time - w[0].time)
        .fold(f64::INFINITY, f64::min)
        / 4.0;
    let mu = if params.mu > 0.0 { params.mu } else { traj.params.mu };
    let lower = ode_ref::solve_ode_regularized(params, delta, mu, t_final, dt)?;
    let upper = ode_ref::solve_ode_limit(params, m, t_final, dt)?;

    let mut worst = 0.0f64;
    let mut loc = None;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        if let Some(zl) = lower.value_at(snap.time) {
            let (mn, argmin) = argext(&snap.u, true);
            let v = zl - mn;
            if v > worst {
                worst = v;
                loc = Some((k, argmin));
            }
        }
        if let Some(zu) = upper.value_at(snap.time) {
            let (mx, argmax) = argext(&snap.u, false);
            let v = mx - zu;
            if v > worst {
                worst = v;
                loc = Some((k, argmax));
            }
        }
    }
    Ok(CheckReport::new(
        "sandwich",
        worst,
        loc,
        tol,
        format!("delta = {delta}, M = {m}, mu = {mu}, {} snapshots", traj.snapshots.len()),
    ))
}

fn argext(u: &Field, minimum: bool) -> (f64, usize) {
    let mut best = if minimum { f64::INFINITY } else { f64::NEG_INFINITY };
    let mut idx = 0;
    for (i, &v) in u.values.iter().enumerate() {
        if (minimum && v < best) || (!minimum && v > best) {
            best = v;
            idx = i;
        }
    }
    (best, idx)
}

/// Advances two trajectories from ordered initial data and keeps them
/// ordered by lattice coupling: whenever the raw minimizers cross, they
/// are replaced by their meet and join, which submodularity guarantees are
/// again minimizers of the respective step functionals. The reported
/// violation is the largest objective drift any repair caused; a drift
/// beyond tolerance means the optimizer returned a non-minimizer.
pub fn check_comparison_coupled(
    grid: &Grid1D,
    u0_low: &Field,
    u0_high: &Field,
    params: &ModelParams,
    config: &RunConfig,
) -> Result<CheckReport> {
    if !u0_low.le(u0_high) {
        return Err(Error::Input("comparison check needs u0_low <= u0_high".into()));
    }
    if !(u0_low.min_value() > 0.0) {
        return Err(Error::Input("comparison check needs strictly positive data".into()));
    }
    let mu = config.mu_schedule.first().copied().unwrap_or(params.mu);
    let params = params.with_mu(mu)?;

    let mut w = u0_low.clone();
    let mut v = u0_high.clone();
    let mut t = 0.0;
    let mut tau = config.tau;
    let mut halvings = 0usize;
    let mut worst_drift = 0.0f64;
    let mut worst_cross = 0.0f64;
    let mut repairs = 0usize;
    let mut step = 0usize;
    let mut worst_loc = None;

    while t < config.t_end * (1.0 - 1e-12) {
        let tau_step = tau.min(config.t_end - t);
        let prob_w = StepProblem::new(*grid, w.clone(), tau_step, params)?;
        let prob_v = StepProblem::new(*grid, v.clone(), tau_step, params)?;
        if !prob_w.tau_is_coercive() {
            halvings += 1;
            if halvings > config.max_tau_halvings {
                return Err(Error::Input("comparison check: tau cannot satisfy coercivity".into()));
            }
            tau *= 0.5;
            continue;
        }
        let res_w = optimizer::minimize_step(&prob_w, &config.settings, None)?;
        let res_v = optimizer::minimize_step(&prob_v, &config.settings, None)?;
        let mut w_next = res_w.u_next;
        let mut v_next = res_v.u_next;
        step += 1;

        if !w_next.le(&v_next) {
            repairs += 1;
            let cross = (0..w_next.len())
                .map(|i| (w_next[i] - v_next[i]).max(0.0))
                .fold(0.0f64, f64::max);
            worst_cross = worst_cross.max(cross);
            let meet = w_next.inf(&v_next);
            let join = w_next.sup(&v_next);
            let jw = energy::j_value_shifted(&prob_w, &w_next);
            let jv = energy::j_value_shifted(&prob_v, &v_next);
            let jw_meet = energy::j_value_shifted(&prob_w, &meet);
            let jv_join = energy::j_value_shifted(&prob_v, &join);
            let scale = 1.0f64.max(jw.abs()).max(jv.abs());
            for (drift, who) in [(jw_meet - jw, 0usize), (jv_join - jv, 1usize)] {
                if drift > worst_drift {
                    worst_drift = drift;
                    worst_loc = Some((step, who));
                }
            }
            let _ = scale;
            w_next = meet;
            v_next = join;
        }

        w = w_next;
        v = v_next;
        t += tau_step;
        if w.max_value() >= config.blowup_cap || v.max_value() >= config.blowup_cap {
            break;
        }
    }

    // The drift of a repair on true minimizers is zero up to rounding in
    // the objective evaluation.
    let tol = config.settings.comp_tol;
    Ok(CheckReport::new(
        "comparison_coupled",
        worst_drift,
        worst_loc,
        tol,
        format!(
            "{step} steps, {repairs} lattice repairs, worst raw crossing {worst_cross:.3e}"
        ),
    ))
}

/// Discrete form of the integrated energy inequality for the transform
/// `B(u)`:
///
/// ```text
///     0 <= - sum |d_t B(u)|^2 - (lambda/2)|grad u(t)|^2
///          + (lambda/2)|grad u0|^2 + sum gamma(u) d_t u,
/// ```
///
/// with forward differences between consecutive snapshots and the `gamma`
/// factor at the right endpoint, matching the implicit stepping. The
/// right side's slack is non-negative for exact step minimizers; the
/// tolerance budgets solver noise as `O(tau)` times recorded magnitudes.
pub fn check_weak_energy(traj: &Trajectory, params: &ModelParams) -> Result<CheckReport> {
    if params.alpha >= 2.0 {
        return Err(Error::Unsupported("weak energy check needs alpha < 2".into()));
    }
    if traj.snapshots.len() < 2 {
        return Err(Error::Input("weak energy check needs at least two snapshots".into()));
    }
    let grid = &traj.grid;
    let h = grid.h();
    let mut db2 = 0.0; // sum tau ||dB/dt||^2
    let mut gdu = 0.0; // sum tau (gamma(u_{n+1}), du/dt)
    let mut tau_max = 0.0f64;
    for pair in traj.snapshots.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let tau = b.time - a.time;
        tau_max = tau_max.max(tau);
        for i in 0..b.u.len() {
            let du = (b.u[i] - a.u[i]) / tau;
            let db = (params.beta_sqrt_primitive(b.u[i])? - params.beta_sqrt_primitive(a.u[i])?)
                / tau;
            db2 += db * db * h * tau;
            gdu += model::gamma_raw(params.p, b.u[i]) * du * h * tau;
        }
    }
    let e0 = grid.dirichlet_energy(&traj.snapshots.first().unwrap().u)?;
    let et = grid.dirichlet_energy(&traj.snapshots.last().unwrap().u)?;
    let slack = -db2 - 0.5 * params.lambda * et + 0.5 * params.lambda * e0 + gdu;
    let scale = 1.0 + db2.abs() + gdu.abs() + 0.5 * params.lambda * (e0 + et);
    let tol = tau_max * scale;
    Ok(CheckReport::new(
        "weak_energy",
        -slack,
        None,
        tol,
        format!("slack = {slack:.6e} (non-negative means the inequality holds)"),
    ))
}

/// A space-time test function `psi_{n,i} = space_i * time_weights[n]`,
/// non-negative with zero final weight.
#[derive(Debug, Clone)]
pub struct TestProfile {
    pub name: String,
    pub space: Field,
    /// One weight per trajectory snapshot.
    pub time_weights: Vec<f64>,
}

/// Default admissible test set: spatial hat bumps (plus a constant) times
/// a linear decay to zero at the final snapshot time.
pub fn default_test_profiles(grid: &Grid1D, times: &[f64]) -> Vec<TestProfile> {
    let t_final = *times.last().expect("at least one snapshot time");
    let decay: Vec<f64> = times.iter().map(|&t| 1.0 - t / t_final).collect();
    let l = grid.length();
    let mut profiles = vec![TestProfile {
        name: "constant".into(),
        space: Field::constant(grid.n_cells(), 1.0),
        time_weights: decay.clone(),
    }];
    for (k, center) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let hat = Field::from_fn(grid, |x| (1.0 - (x - center * l).abs() / (0.25 * l)).max(0.0));
        profiles.push(TestProfile {
            name: format!("hat{k}"),
            space: hat,
            time_weights: decay.clone(),
        });
    }
    profiles
}

/// Discrete form of the variational inequality
///
/// ```text
///     sum beta(u) d_t psi + (beta(u0), psi(0))
///         - sum (lambda grad u . grad psi - gamma(u) psi) <= 0
/// ```
///
/// for each admissible profile. The regularization enters this inequality
/// with the unfavorable sign, so its exact discrete contribution
/// `sum tau mu (gamma(du/dt), psi)` is added to the tolerance budget on
/// top of the `O(tau)` solver-noise term.
pub fn check_weak_variational(
    traj: &Trajectory,
    params: &ModelParams,
    profiles: &[TestProfile],
) -> Result<CheckReport> {
    if traj.snapshots.len() < 2 {
        return Err(Error::Input("weak variational check needs at least two snapshots".into()));
    }
    let grid = &traj.grid;
    let h = grid.h();
    let n_snap = traj.snapshots.len();
    let small_p = params.small_p_variant();
    let mu = traj.params.mu;

    let mut worst = f64::NEG_INFINITY;
    let mut tol = 0.0f64;
    let mut which = String::new();
    for profile in profiles {
        if profile.space.len() != grid.n_cells() {
            return Err(Error::SizeMismatch { expected: grid.n_cells(), got: profile.space.len() });
        }
        if profile.time_weights.len() != n_snap {
            return Err(Error::Input(format!(
                "profile '{}' has {} time weights for {} snapshots",
                profile.name,
                profile.time_weights.len(),
                n_snap
            )));
        }
        if profile.space.min_value() < 0.0 || profile.time_weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Input(format!("profile '{}' must be non-negative", profile.name)));
        }
        let w_last = *profile.time_weights.last().unwrap();
        if w_last != 0.0 {
            return Err(Error::Input(format!(
                "profile '{}' must vanish at the final time",
                profile.name
            )));
        }

        let mut lhs = 0.0;
        let mut mu_term = 0.0;
        let mut mag = 0.0f64;
        let mut tau_max = 0.0f64;
        // Initial-data term (beta(u0), psi(0)).
        let snap0 = &traj.snapshots[0];
        for i in 0..grid.n_cells() {
            lhs += model::beta_raw(params.alpha, snap0.u[i])
                * profile.space[i]
                * profile.time_weights[0]
                * h;
        }
        mag += lhs.abs();
        for k in 0..n_snap - 1 {
            let (a, b) = (&traj.snapshots[k], &traj.snapshots[k + 1]);
            let tau = b.time - a.time;
            tau_max = tau_max.max(tau);
            let wk = profile.time_weights[k];
            let wk1 = profile.time_weights[k + 1];
            let dpsi_dt = (wk1 - wk) / tau;
            let psi_next = Field::new(profile.space.values.iter().map(|&s| s * wk1).collect());
            let grad_pair = grid.gradient_pairing(&b.u, &psi_next)?;
            let mut cell_terms = 0.0;
            for i in 0..grid.n_cells() {
                let beta_n = model::beta_raw(params.alpha, a.u[i]);
                cell_terms += beta_n * profile.space[i] * dpsi_dt * h;
                cell_terms += model::gamma_raw(params.p, b.u[i]) * psi_next[i] * h;
                let rate = (b.u[i] - a.u[i]) / tau;
                let reg = if small_p { rate } else { model::gamma_raw(params.p, rate) };
                mu_term += mu * reg * psi_next[i] * h * tau;
            }
            lhs += tau * (cell_terms - params.lambda * grad_pair);
            mag += tau * (cell_terms.abs() + params.lambda * grad_pair.abs());
        }
        let budget = mu_term + tau_max * (1.0 + mag);
        if lhs > worst {
            worst = lhs;
            tol = budget;
            which = profile.name.clone();
        } else if worst == f64::NEG_INFINITY {
            tol = budget;
        }
    }
    Ok(CheckReport::new(
        "weak_variational",
        worst.max(0.0),
        None,
        tol,
        format!("{} profiles, worst from '{}' = {:.6e}", profiles.len(), which, worst),
    ))
}

/// The multiplier law `xi_n = -(lambda Lap u_n + gamma(u_n))_-`, checked
/// at every snapshot relative to the drive magnitude.
pub fn check_xi_identity(traj: &Trajectory, params: &ModelParams, rel_tol: f64) -> Result<CheckReport> {
    let grid = &traj.grid;
    let mut worst = 0.0f64;
    let mut loc = None;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let lap = grid.laplacian_neumann(&snap.u)?;
        let mut scale = 1.0f64;
        let mut local_worst = 0.0f64;
        let mut local_i = 0;
        for i in 0..snap.u.len() {
            let drive = params.lambda * lap[i] + model::gamma_raw(params.p, snap.u[i]);
            scale = scale.max(drive.abs());
            let err = (snap.xi[i] - drive.min(0.0)).abs();
            if err > local_worst {
                local_worst = err;
                local_i = i;
            }
        }
        let rel = local_worst / scale;
        if rel > worst {
            worst = rel;
            loc = Some((snap.step, local_i));
        }
        let _ = k;
    }
    Ok(CheckReport::new(
        "xi_identity",
        worst,
        loc,
        rel_tol,
        format!("{} snapshots", traj.snapshots.len()),
    ))
}

/// Non-increase of the recorded multiplier norms, including the initial
/// diagnostic at step 0.
pub fn check_xi_monotone(traj: &Trajectory, tol: f64) -> CheckReport {
    let mut worst = 0.0f64;
    let mut loc = None;
    for (n, w) in traj.xi_norms.windows(2).enumerate() {
        for (inc, tag) in [(w[1].linf - w[0].linf, 0usize), (w[1].l2 - w[0].l2, 1usize)] {
            if inc > worst {
                worst = inc;
                loc = Some((n + 1, tag));
            }
        }
    }
    CheckReport::new(
        "xi_monotone",
        worst,
        loc,
        tol,
        format!("{} steps (location cell index 0 = sup norm, 1 = L2)", traj.xi_norms.len()),
    )
}

/// Cells whose initial drive `lambda Lap u0 + gamma(u0)` sits at or below
/// `drive_threshold` must hold their initial value bit-exactly for the
/// first `n_steps` recorded steps.
pub fn check_freeze(
    traj: &Trajectory,
    params: &ModelParams,
    drive_threshold: f64,
    n_steps: usize,
) -> Result<CheckReport> {
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| Error::Input("trajectory has no snapshots".into()))?;
    let lap = traj.grid.laplacian_neumann(&first.u)?;
    let frozen: Vec<usize> = (0..first.u.len())
        .filter(|&i| {
            params.lambda * lap[i] + model::gamma_raw(params.p, first.u[i]) <= drive_threshold
        })
        .collect();
    let mut worst = 0.0f64;
    let mut loc = None;
    for snap in traj.snapshots.iter().filter(|s| s.step > 0 && s.step <= n_steps) {
        for &i in &frozen {
            if snap.u[i].to_bits() != first.u[i].to_bits() {
                let diff = (snap.u[i] - first.u[i]).abs().max(f64::MIN_POSITIVE);
                if diff > worst {
                    worst = diff;
                    loc = Some((snap.step, i));
                }
            }
        }
    }
    Ok(CheckReport::new(
        "freeze",
        worst,
        loc,
        0.0,
        format!("{} cells at drive <= {drive_threshold} over {n_steps} steps", frozen.len()),
    ))
}
