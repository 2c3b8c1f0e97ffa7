//! Time marching for the regularized problem, with blow-up detection and
//! the mu-continuation study.
//!
//! One trajectory repeatedly minimizes the step functional with warm
//! starts. The time grid is uniform with emergency halving: when the
//! coercivity guard rejects `tau` (or the step minimizer stalls), `tau` is
//! halved permanently and the step retried; the acceptance studies do
//! their own refinement in `tau`, so no further adaptivity is attempted.
//!
//! Blow-up is declared by threshold crossing of the sup norm; the reported
//! time is the midpoint convention `t_last + tau/2`.
//!
//! Weak (degenerate-data) mode runs the strong solver on shifted data
//! `u0 + shift` and records the series `B(u)` needed by the weak-form
//! energy inequality; no direct singular solve is attempted.

use crate::energy::StepProblem;
use crate::grid::{Field, Grid1D};
use crate::model::{self, ModelParams};
use crate::optimizer::{self, SolveSettings};
use crate::{Error, Result};

/// Strong mode requires `min u0 > 0`; weak mode accepts `u0 >= 0` and
/// shifts it by the given amount before stepping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    Strong,
    Weak { shift: f64 },
}

/// Controls for one trajectory run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub t_end: f64,
    /// Initial step; halved (permanently) whenever a step is rejected.
    pub tau: f64,
    /// Regularization levels for [`mu_continuation`]; [`run_trajectory`]
    /// uses the head (falling back to `params.mu` when empty).
    pub mu_schedule: Vec<f64>,
    /// Sup-norm threshold that declares blow-up.
    pub blowup_cap: f64,
    /// Snapshot stride; scalar series are recorded every step regardless.
    pub record_every: usize,
    pub mode: RunMode,
    /// Extra `xi` norm exponent recorded alongside 2 and infinity.
    pub xi_q: Option<f64>,
    pub settings: SolveSettings,
    pub max_tau_halvings: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            tau: 1e-3,
            mu_schedule: vec![1e-3],
            blowup_cap: 1e6,
            record_every: 1,
            mode: RunMode::Strong,
            xi_q: None,
            settings: SolveSettings::default(),
            max_tau_halvings: 16,
        }
    }
}

/// Per-step multiplier norms.
#[derive(Debug, Clone, Copy)]
pub struct XiNorms {
    pub l2: f64,
    pub linf: f64,
    pub lq: Option<f64>,
}

/// Per-step energy components: `(lambda/2)`-free Dirichlet energy,
/// `int gamma_hat(u)`, `int beta_hat(u)`.
#[derive(Debug, Clone, Copy)]
pub struct EnergySeries {
    pub dirichlet: f64,
    pub gamma_hat: f64,
    pub beta_hat: f64,
}

/// Full state recorded at a subset of steps.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub u: Field,
    /// Multiplier produced by the step that *reached* this state; at step 0
    /// the diagnostic `-(lambda Lap u0 + gamma(u0))_-`.
    pub xi: Field,
    /// `B(u)` in weak mode (`alpha < 2`).
    pub b: Option<Field>,
}

/// One computed evolution with all diagnostic series.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid1D,
    /// Model parameters with the mu level this run actually used.
    pub params: ModelParams,
    pub mode: RunMode,
    /// Time at every accepted step, starting at 0.
    pub times: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub xi_norms: Vec<XiNorms>,
    pub sup_norms: Vec<f64>,
    pub min_values: Vec<f64>,
    pub energies: Vec<EnergySeries>,
    pub blown_up: bool,
    pub blowup_time: Option<f64>,
    pub tau_halvings: usize,
}

impl Trajectory {
    pub fn final_field(&self) -> &Field {
        &self.snapshots.last().expect("at least the initial snapshot").u
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Snapshot whose time matches `t` within a relative tolerance.
    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.time - t).abs() <= 1e-9 * t.abs().max(1.0))
    }
}

/// The initial multiplier diagnostic `-(lambda Lap u0 + gamma(u0))_-`.
fn initial_xi(grid: &Grid1D, u0: &Field, params: &ModelParams) -> Result<Field> {
    let lap = grid.laplacian_neumann(u0)?;
    let vals = (0..u0.len())
        .map(|i| {
            let drive = params.lambda * lap[i] + model::gamma_raw(params.p, u0[i]);
            drive.min(0.0)
        })
        .collect();
    Ok(Field::new(vals))
}

fn xi_norms(grid: &Grid1D, xi: &Field, q: Option<f64>) -> Result<XiNorms> {
    Ok(XiNorms {
        l2: grid.lp_norm(xi, 2.0)?,
        linf: grid.lp_norm(xi, f64::INFINITY)?,
        lq: match q {
            Some(q) => Some(grid.lp_norm(xi, q)?),
            None => None,
        },
    })
}

fn energy_series(grid: &Grid1D, u: &Field, params: &ModelParams) -> Result<EnergySeries> {
    let h = grid.h();
    let mut gamma_hat = 0.0;
    let mut beta_hat = 0.0;
    for &v in &u.values {
        gamma_hat += model::gamma_hat_raw(params.p, v) * h;
        beta_hat += model::beta_hat_raw(params.alpha, v) * h;
    }
    Ok(EnergySeries { dirichlet: grid.dirichlet_energy(u)?, gamma_hat, beta_hat })
}

/// Runs the time evolution from `u0` until `t_end` or blow-up.
///
/// The effective regularization is the head of `config.mu_schedule`
/// (falling back to `params.mu`); it must be positive for `p >= 2`, since
/// the unregularized functional is unbounded below there.
pub fn run_trajectory(
    grid: &Grid1D,
    u0: &Field,
    params: &ModelParams,
    config: &RunConfig,
) -> Result<Trajectory> {
    if u0.len() != grid.n_cells() {
        return Err(Error::SizeMismatch { expected: grid.n_cells(), got: u0.len() });
    }
    if !(config.t_end > 0.0) || !(config.tau > 0.0) {
        return Err(Error::Input("t_end and tau must be positive".into()));
    }
    if config.record_every == 0 {
        return Err(Error::Input("record_every must be at least 1".into()));
    }

    let mu = config.mu_schedule.first().copied().unwrap_or(params.mu);
    let params = params.with_mu(mu)?;
    if !params.small_p_variant() && mu == 0.0 {
        return Err(Error::Input("p >= 2 requires a positive mu level".into()));
    }

    let (u_start, want_b) = match config.mode {
        RunMode::Strong => {
            if !(u0.min_value() > 0.0) {
                return Err(Error::Domain("strong mode needs min u0 > 0".into()));
            }
            (u0.clone(), false)
        }
        RunMode::Weak { shift } => {
            if !(shift > 0.0) {
                return Err(Error::Input("weak mode needs a positive shift".into()));
            }
            if u0.min_value() < 0.0 {
                return Err(Error::Domain("weak mode needs u0 >= 0".into()));
            }
            if params.alpha >= 2.0 {
                return Err(Error::Unsupported(
                    "weak mode records B(u), which needs alpha < 2".into(),
                ));
            }
            let shifted = Field::new(u0.values.iter().map(|&v| v + shift).collect());
            (shifted, true)
        }
    };

    let b_of = |u: &Field| -> Option<Field> {
        want_b.then(|| {
            Field::new(
                u.values
                    .iter()
                    .map(|&v| params.beta_sqrt_primitive(v).expect("alpha < 2, v > 0"))
                    .collect(),
            )
        })
    };

    let xi0 = initial_xi(grid, &u_start, &params)?;
    let mut traj = Trajectory {
        grid: *grid,
        params,
        mode: config.mode,
        times: vec![0.0],
        snapshots: vec![Snapshot { step: 0, time: 0.0, u: u_start.clone(), xi: xi0.clone(), b: b_of(&u_start) }],
        xi_norms: vec![xi_norms(grid, &xi0, config.xi_q)?],
        sup_norms: vec![u_start.max_value()],
        min_values: vec![u_start.min_value()],
        energies: vec![energy_series(grid, &u_start, &params)?],
        blown_up: false,
        blowup_time: None,
        tau_halvings: 0,
    };

    let floor = u_start.min_value();
    let mut u = u_start;
    let mut t = 0.0;
    let mut tau = config.tau;
    let mut step = 0usize;

    while t < config.t_end * (1.0 - 1e-12) && !traj.blown_up {
        let tau_step = tau.min(config.t_end - t);
        let prob = StepProblem::new(*grid, u.clone(), tau_step, params)?;
        let result = match optimizer::minimize_step(&prob, &config.settings, None) {
            Ok(r) => r,
            Err(Error::StepTooLarge { .. }) | Err(Error::NonConverged { .. }) => {
                traj.tau_halvings += 1;
                if traj.tau_halvings > config.max_tau_halvings {
                    let time = t;
                    return Err(Error::Aborted {
                        time,
                        reason: format!("step rejected after {} tau halvings", traj.tau_halvings),
                        partial: Box::new(traj),
                    });
                }
                tau *= 0.5;
                continue;
            }
            Err(e) => return Err(e),
        };

        // Hard invariants of the scheme.
        assert!(prob.u_prev.le(&result.u_next), "unidirectionality violated");
        assert!(result.u_next.min_value() >= floor, "positivity floor violated");

        u = result.u_next;
        t += tau_step;
        step += 1;
        traj.times.push(t);
        traj.xi_norms.push(xi_norms(grid, &result.xi, config.xi_q)?);
        traj.sup_norms.push(u.max_value());
        traj.min_values.push(u.min_value());
        traj.energies.push(energy_series(grid, &u, &params)?);

        let crossed = u.max_value() >= config.blowup_cap;
        if crossed {
            traj.blown_up = true;
            traj.blowup_time = Some(t - tau_step / 2.0);
        }
        if step % config.record_every == 0 || crossed || t >= config.t_end * (1.0 - 1e-12) {
            traj.snapshots.push(Snapshot { step, time: t, u: u.clone(), xi: result.xi, b: b_of(&u) });
        }
    }

    Ok(traj)
}

/// L2 distances between two trajectories of one continuation pair, at the
/// snapshot times they share.
#[derive(Debug, Clone)]
pub struct CauchyDiff {
    pub mu_coarse: f64,
    pub mu_fine: f64,
    /// `(time, ||u_coarse - u_fine||_L2)` at matched snapshot times.
    pub diffs: Vec<(f64, f64)>,
}

#[derive(Debug)]
pub struct MuContinuationResult {
    /// One trajectory per schedule level, in schedule order.
    pub trajectories: Vec<Trajectory>,
    pub cauchy: Vec<CauchyDiff>,
}

impl MuContinuationResult {
    /// First-order Richardson extrapolation in mu of the final two levels
    /// at time `t` (optional refinement; nothing in the pipeline uses it
    /// unless asked).
    pub fn richardson_estimate(&self, t: f64) -> Option<Field> {
        let n = self.trajectories.len();
        if n < 2 {
            return None;
        }
        let coarse = self.trajectories[n - 2].snapshot_at(t)?;
        let fine = self.trajectories[n - 1].snapshot_at(t)?;
        let mu_c = self.trajectories[n - 2].params.mu;
        let mu_f = self.trajectories[n - 1].params.mu;
        let w = mu_f / (mu_c - mu_f);
        Some(Field::new(
            fine.u
                .values
                .iter()
                .zip(&coarse.u.values)
                .map(|(&f, &c)| f + w * (f - c))
                .collect(),
        ))
    }
}

/// Runs [`run_trajectory`] once per schedule level and reports the Cauchy
/// differences between consecutive levels at matched snapshot times.
///
/// A single-level schedule degenerates to one plain trajectory with no
/// differences.
pub fn mu_continuation(
    grid: &Grid1D,
    u0: &Field,
    params: &ModelParams,
    config: &RunConfig,
) -> Result<MuContinuationResult> {
    if config.mu_schedule.is_empty() {
        return Err(Error::Input("mu_continuation needs a non-empty mu schedule".into()));
    }
    for w in config.mu_schedule.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Input("mu schedule must be strictly decreasing".into()));
        }
    }
    let mut trajectories = Vec::with_capacity(config.mu_schedule.len());
    for &mu in &config.mu_schedule {
        let level = RunConfig { mu_schedule: vec![mu], ..config.clone() };
        trajectories.push(run_trajectory(grid, u0, params, &level)?);
    }
    let mut cauchy = Vec::new();
    for pair in trajectories.windows(2) {
        let mut diffs = Vec::new();
        for snap in &pair[0].snapshots {
            if let Some(other) = pair[1].snapshot_at(snap.time) {
                let d = Field::new(
                    snap.u.values.iter().zip(&other.u.values).map(|(&a, &b)| a - b).collect(),
                );
                diffs.push((snap.time, grid.lp_norm(&d, 2.0)?));
            }
        }
        cauchy.push(CauchyDiff {
            mu_coarse: pair[0].params.mu,
            mu_fine: pair[1].params.mu,
            diffs,
        });
    }
    Ok(MuContinuationResult { trajectories, cauchy })
}

/// Runs the strong solver on `u0 + shift` for each shift, mirroring the
/// approximation of degenerate data by strictly positive data.
pub fn run_weak_shifts(
    grid: &Grid1D,
    u0: &Field,
    params: &ModelParams,
    config: &RunConfig,
    shifts: &[f64],
) -> Result<Vec<Trajectory>> {
    shifts
        .iter()
        .map(|&shift| {
            let cfg = RunConfig { mode: RunMode::Weak { shift }, ..config.clone() };
            run_trajectory(grid, u0, params, &cfg)
        })
        .collect()
}

/// Per recorded step, the L2 defect of the positive-part formulation:
/// `|| (beta(u_{n+1}) - beta(u_n)) / tau - (lambda Lap u_{n+1} + gamma(u_{n+1}))_+ ||_2`.
///
/// Small values certify that the computed evolution solves the clipped
/// equation up to the regularization term.
pub fn fully_nonlinear_residual(traj: &Trajectory, params: &ModelParams) -> Result<Vec<f64>> {
    if traj.snapshots.len() < 2 {
        return Err(Error::Input("fully_nonlinear_residual needs at least two snapshots".into()));
    }
    let grid = &traj.grid;
    let mut out = Vec::with_capacity(traj.snapshots.len() - 1);
    for pair in traj.snapshots.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let tau = b.time - a.time;
        let lap = grid.laplacian_neumann(&b.u)?;
        let vals = (0..b.u.len())
            .map(|i| {
                let dbeta = model::beta_diff(params.alpha, a.u[i], b.u[i]) / tau;
                let drive = params.lambda * lap[i] + model::gamma_raw(params.p, b.u[i]);
                dbeta - drive.max(0.0)
            })
            .collect();
        out.push(grid.lp_norm(&Field::new(vals), 2.0)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_ref;
    use approx::assert_relative_eq;

    fn params(p: f64, alpha: f64, lambda: f64) -> ModelParams {
        ModelParams::new(p, alpha, lambda, 0.0).unwrap()
    }

    #[test]
    fn constant_data_tracks_regularized_ode_first_order() {
        let grid = Grid1D::new(4, 1.0).unwrap();
        let m = params(3.0, 0.0, 1.0);
        let mu = 0.1;
        let t_end = 0.2;
        let ode = ode_ref::solve_ode_regularized(&m, 1.0, mu, t_end, 1e-5).unwrap();
        let target = ode.value_at(t_end).unwrap();
        let run = |tau: f64| {
            let config = RunConfig {
                t_end,
                tau,
                mu_schedule: vec![mu],
                record_every: 1000,
                ..Default::default()
            };
            let traj = run_trajectory(&grid, &Field::constant(4, 1.0), &m, &config).unwrap();
            // Constant in space at every step.
            let last = traj.final_field();
            let c = last[0];
            assert!(last.values.iter().all(|&v| v == c));
            (c - target).abs()
        };
        let e1 = run(2e-3);
        let e2 = run(1e-3);
        assert!(e1 / e2 > 1.5, "tau errors {e1} vs {e2}");
        assert!(e2 < 5e-3 * target);
    }

    #[test]
    fn constant_blowup_time_near_inverse_m() {
        let grid = Grid1D::new(4, 1.0).unwrap();
        let m = params(3.0, 0.0, 1.0);
        let config = RunConfig {
            t_end: 2.0,
            tau: 1e-3,
            mu_schedule: vec![1e-3],
            blowup_cap: 1e4,
            record_every: 100_000,
            ..Default::default()
        };
        let traj = run_trajectory(&grid, &Field::constant(4, 1.0), &m, &config).unwrap();
        assert!(traj.blown_up);
        let t_b = traj.blowup_time.unwrap();
        assert!((t_b - 1.0).abs() < 0.25, "blow-up reported at {t_b}");
        // Sup norms never decrease.
        for w in traj.sup_norms.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn sublinear_case_never_blows_up() {
        let grid = Grid1D::new(4, 1.0).unwrap();
        let m = params(2.0, 0.0, 1.0);
        let config = RunConfig {
            t_end: 3.0,
            tau: 1e-3,
            mu_schedule: vec![1e-2],
            record_every: 1000,
            ..Default::default()
        };
        let traj = run_trajectory(&grid, &Field::constant(4, 1.0), &m, &config).unwrap();
        assert!(!traj.blown_up);
        // Growth close to exp(t/(1+mu)).
        let expect = (3.0 / 1.01f64).exp();
        assert_relative_eq!(traj.sup_norms.last().unwrap(), &expect, max_relative = 0.02);
    }

    /// Fixture with a frozen left region: u0 = 1 + 0.3 cos(pi x / L) and
    /// lambda tuned so the drive is <= -0.25 at the left wall and positive
    /// on the right half.
    fn frozen_fixture() -> (Grid1D, Field, ModelParams) {
        let grid = Grid1D::new(32, 1.0).unwrap();
        let m = params(2.0, 0.0, 0.5235);
        let u0 = Field::from_fn(&grid, |x| 1.0 + 0.3 * (std::f64::consts::PI * x).cos());
        (grid, u0, m)
    }

    #[test]
    fn frozen_region_stays_put_with_negative_xi() {
        let (grid, u0, m) = frozen_fixture();
        let lap = grid.laplacian_neumann(&u0).unwrap();
        let drive: Vec<f64> =
            (0..32).map(|i| m.lambda * lap[i] + u0[i]).collect();
        assert!(drive[0] < -0.1, "fixture must freeze the left wall");
        assert!(*drive.last().unwrap() > 0.5, "fixture must move on the right");
        let config = RunConfig {
            t_end: 5e-3,
            tau: 1e-3,
            mu_schedule: vec![0.01],
            ..Default::default()
        };
        let traj = run_trajectory(&grid, &u0, &m, &config).unwrap();
        assert_eq!(traj.snapshots.len(), 6);
        for snap in &traj.snapshots[1..] {
            for i in 0..32 {
                if drive[i] <= -0.1 {
                    assert_eq!(snap.u[i].to_bits(), u0[i].to_bits(), "cell {i} moved");
                    assert!(snap.xi[i] < 0.0, "xi must be negative on the frozen set");
                }
            }
        }
    }

    #[test]
    fn xi_identity_and_monotone_norms_on_bump() {
        let (grid, u0, m) = frozen_fixture();
        let config = RunConfig {
            t_end: 0.02,
            tau: 1e-3,
            mu_schedule: vec![0.01],
            xi_q: Some(4.0),
            ..Default::default()
        };
        let traj = run_trajectory(&grid, &u0, &m, &config).unwrap();
        // xi_n = -(lambda Lap u_n + gamma(u_n))_- within solver tolerance.
        for snap in &traj.snapshots {
            let lap = grid.laplacian_neumann(&snap.u).unwrap();
            for i in 0..32 {
                let drive = m.lambda * lap[i] + snap.u[i];
                let expect = drive.min(0.0);
                assert!(
                    (snap.xi[i] - expect).abs() <= 1e-6,
                    "step {}, cell {i}: xi {} vs -(drive)_- {}",
                    snap.step,
                    snap.xi[i],
                    expect
                );
            }
        }
        // Norm monotonicity in every recorded exponent.
        for w in traj.xi_norms.windows(2) {
            assert!(w[1].l2 <= w[0].l2 + 1e-8);
            assert!(w[1].linf <= w[0].linf + 1e-8);
            assert!(w[1].lq.unwrap() <= w[0].lq.unwrap() + 1e-8);
        }
        // And the initial diagnostic dominates the whole series.
        let x0 = &traj.xi_norms[0];
        for x in &traj.xi_norms {
            assert!(x.l2 <= x0.l2 + 1e-8);
            assert!(x.linf <= x0.linf + 1e-8);
        }
    }

    #[test]
    fn mu_continuation_differences_shrink() {
        let grid = Grid1D::new(4, 1.0).unwrap();
        let m = params(2.0, 0.0, 1.0);
        let config = RunConfig {
            t_end: 0.5,
            tau: 1e-3,
            mu_schedule: vec![0.1, 0.05, 0.025],
            record_every: 100,
            ..Default::default()
        };
        let res = mu_continuation(&grid, &Field::constant(4, 1.0), &m, &config).unwrap();
        assert_eq!(res.trajectories.len(), 3);
        assert_eq!(res.cauchy.len(), 2);
        let d0 = res.cauchy[0].diffs.last().unwrap().1;
        let d1 = res.cauchy[1].diffs.last().unwrap().1;
        assert!(d1 < d0, "differences must shrink: {d0} vs {d1}");
        // All levels constant in space.
        for traj in &res.trajectories {
            let last = traj.final_field();
            assert!(last.values.iter().all(|&v| v == last[0]));
        }
        // Richardson estimate sits beyond the finest level (toward mu = 0).
        let rich = res.richardson_estimate(0.5).unwrap();
        assert!(rich[0] > res.trajectories[2].final_field()[0]);
    }

    #[test]
    fn single_level_schedule_matches_run_trajectory() {
        let grid = Grid1D::new(3, 1.0).unwrap();
        let m = params(2.0, 0.0, 1.0);
        let config = RunConfig {
            t_end: 0.1,
            tau: 1e-3,
            mu_schedule: vec![0.05],
            ..Default::default()
        };
        let cont = mu_continuation(&grid, &Field::constant(3, 1.0), &m, &config).unwrap();
        let single = run_trajectory(&grid, &Field::constant(3, 1.0), &m, &config).unwrap();
        assert!(cont.cauchy.is_empty());
        assert_eq!(cont.trajectories[0].final_field().values, single.final_field().values);
    }

    #[test]
    fn weak_mode_shifts_and_records_b() {
        let grid = Grid1D::new(16, 1.0).unwrap();
        let m = params(2.0, 1.0, 0.2);
        // Bump touching zero.
        let u0 = Field::from_fn(&grid, |x| {
            let d = (x - 0.5).abs();
            if d < 0.25 { (1.0 + (std::f64::consts::PI * d / 0.25).cos()) * 0.5 } else { 0.0 }
        });
        assert_eq!(u0.min_value(), 0.0);
        let config = RunConfig {
            t_end: 0.01,
            tau: 1e-3,
            mu_schedule: vec![2e-3],
            ..Default::default()
        };
        let trajs = run_weak_shifts(&grid, &u0, &m, &config, &[1e-1, 1e-2]).unwrap();
        assert_eq!(trajs.len(), 2);
        for (traj, shift) in trajs.iter().zip([1e-1, 1e-2]) {
            assert_eq!(traj.mode, RunMode::Weak { shift });
            assert_relative_eq!(traj.min_values[0], shift, max_relative = 1e-12);
            let snap = &traj.snapshots[0];
            let b = snap.b.as_ref().expect("weak mode records B(u)");
            // alpha = 1: B(s) = 2 sqrt(s).
            assert_relative_eq!(b[0], 2.0 * snap.u[0].sqrt(), max_relative = 1e-12);
        }
        // Strong mode rejects data touching zero.
        assert!(run_trajectory(&grid, &u0, &m, &config).is_err());
    }

    #[test]
    fn nonlinear_residual_shrinks_with_tau_and_mu() {
        let grid = Grid1D::new(4, 1.0).unwrap();
        let m = params(2.0, 0.0, 1.0);
        let run = |tau: f64, mu: f64| {
            let config = RunConfig {
                t_end: 0.1,
                tau,
                mu_schedule: vec![mu],
                ..Default::default()
            };
            let traj = run_trajectory(&grid, &Field::constant(4, 1.0), &m, &config).unwrap();
            let r = fully_nonlinear_residual(&traj, &traj.params.clone()).unwrap();
            r.iter().cloned().fold(0.0f64, f64::max)
        };
        let coarse = run(4e-3, 4e-2);
        let fine = run(1e-3, 1e-2);
        assert!(fine < coarse, "residual should drop: {coarse} vs {fine}");
        assert!(fine < 2e-2);
    }

    #[test]
    fn aborts_cleanly_when_tau_cannot_satisfy_coercivity() {
        let grid = Grid1D::new(3, 1.0).unwrap();
        // p = 4 with tiny mu: mu tau^{ -3 } never reaches p within the
        // allowed halvings starting from a large tau.
        let m = params(4.0, 0.0, 1.0);
        let config = RunConfig {
            t_end: 1.0,
            tau: 10.0,
            mu_schedule: vec![1e-12],
            max_tau_halvings: 3,
            ..Default::default()
        };
        match run_trajectory(&grid, &Field::constant(3, 1.0), &m, &config) {
            Err(Error::Aborted { partial, .. }) => {
                assert_eq!(partial.times.len(), 1);
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }
}
