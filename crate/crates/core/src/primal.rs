//! Time integration of the primal parabolic-elliptic-ODE system on the unit
//! disk: parabolic u (implicit diffusion, explicit upwind advection),
//! elliptic v solved by the exact radial cumulative-integral formula, and w
//! advanced by an exponential integrator with the exact kernel decay.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::radial::{integrate_disk, mass_function, RadialGrid, RadialProfile, XiGrid};
use crate::trajectory::{ProfileSeries, TrajectoryRecord};

/// Solver state at one time level. `v` carries the zero-mean representative
/// of the potential; `vr_faces` its radial derivative at the n+1 cell faces.
#[derive(Debug, Clone)]
pub struct PrimalState {
    pub t: f64,
    pub u: RadialProfile,
    pub w: RadialProfile,
    pub v: RadialProfile,
    pub vr_faces: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PrimalConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: f64,
    /// Sup-norm level at which the run stops and is flagged as blown up.
    pub blowup_threshold: f64,
    /// Exponent p > 1 of the energy monitor columns.
    pub energy_p: f64,
    /// When set, mass-function snapshots on this grid are recorded at the
    /// diagnostic cadence.
    pub xi_diag: Option<XiGrid>,
    /// When set, the nodewise max of U over records with t <= this value is
    /// accumulated (feeds the subcritical supersolution construction).
    pub umax_until: Option<f64>,
    /// Record times at which (u, w) profile snapshots are kept.
    pub snapshot_times: Vec<f64>,
}

impl PrimalConfig {
    pub fn new(dt: f64, t_end: f64, record_every: f64, blowup_threshold: f64) -> Result<Self> {
        if !(dt > 0.0 && t_end > 0.0 && blowup_threshold > 0.0 && record_every > 0.0) {
            return Err(Error::invalid(
                "dt, t_end, record_every and blowup_threshold must be positive",
            ));
        }
        Ok(Self {
            dt,
            t_end,
            record_every,
            blowup_threshold,
            energy_p: 2.0,
            xi_diag: None,
            umax_until: None,
            snapshot_times: Vec::new(),
        })
    }
}

/// Everything a primal run produces beyond the final state.
#[derive(Debug, Clone)]
pub struct PrimalRun {
    pub trajectory: TrajectoryRecord,
    pub final_state: PrimalState,
    /// Mass-function snapshots at the record cadence (when requested).
    pub u_series: Option<ProfileSeries>,
    /// Nodewise max of U over the records with t <= umax_until.
    pub u_max_profile: Option<Vec<f64>>,
    /// (t, u, w) at the requested snapshot times.
    pub snapshots: Vec<(f64, RadialProfile, RadialProfile)>,
}

pub const TRAJECTORY_COLUMNS: [&str; 9] = [
    "t",
    "sup_u",
    "sup_w",
    "mass_u",
    "mass_w",
    "u_at_0",
    "U_slope_0",
    "energy_lhs",
    "energy_rhs",
];

/// Solve the elliptic equation `0 = Delta v - mu + w` with Neumann data and
/// zero disk mean, via `r v_r(r) = mu r^2/2 - int_0^r rho w drho`.
///
/// The cumulative integral is exact for the piecewise-constant w, so
/// v_r(0) = 0 and v_r(1) = 0 hold structurally; the boundary face is pinned
/// to exactly zero. `mu` must equal the disk mean of w (solvability).
pub fn solve_v(w: &RadialProfile, mu: f64) -> Result<(RadialProfile, Vec<f64>)> {
    let grid = &w.grid;
    let n = grid.n;
    let mean = integrate_disk(w)? / PI;
    let scale = mu.abs().max(mean.abs()).max(1e-300);
    let rel_gap = (mu - mean).abs() / scale;
    if rel_gap > 1e-8 {
        return Err(Error::Compatibility { mu, mean, rel_gap });
    }

    // S_i = int_0^{r_i} rho w drho at faces, exact for cellwise-constant w.
    let mut s = vec![0.0; n + 1];
    for i in 0..n {
        let (rl, rr) = (grid.r_faces[i], grid.r_faces[i + 1]);
        s[i + 1] = s[i] + 0.5 * w.values[i] * (rr * rr - rl * rl);
    }

    let mut vr = vec![0.0; n + 1];
    for i in 1..n {
        let r = grid.r_faces[i];
        vr[i] = (0.5 * mu * r * r - s[i]) / r;
    }
    vr[0] = 0.0;
    vr[n] = 0.0;

    // v at faces by trapezoidal integration of vr inward from r = 1,
    // then cell-center values and the zero-mean shift.
    let mut v_face = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let h = grid.r_faces[i + 1] - grid.r_faces[i];
        v_face[i] = v_face[i + 1] - 0.5 * (vr[i] + vr[i + 1]) * h;
    }
    let mut v_vals: Vec<f64> = (0..n).map(|i| 0.5 * (v_face[i] + v_face[i + 1])).collect();
    let v_tmp = RadialProfile::new(grid.clone(), v_vals.clone())?;
    let shift = integrate_disk(&v_tmp)? / PI;
    for v in &mut v_vals {
        *v -= shift;
    }
    Ok((RadialProfile::new(grid.clone(), v_vals)?, vr))
}

/// Exponential-integrator step for `tau w_t + delta w = u`:
/// exact kernel decay e^{-delta dt/tau} and a source that is linear in time
/// between the step endpoints (so constant-in-time u is integrated exactly).
pub fn step_w(
    w: &RadialProfile,
    u_old: &RadialProfile,
    u_new: &RadialProfile,
    p: &ModelParams,
    dt: f64,
) -> Result<RadialProfile> {
    if dt <= 0.0 {
        return Err(Error::invalid("step_w: dt must be positive"));
    }
    let z = p.lambda() * dt;
    let decay = (-z).exp();
    // phi1 = int_0^dt e^{-lambda(dt-s)} ds, phi2 = same with weight s/dt.
    let (phi1, phi2) = if z > 1e-5 {
        let lam = p.lambda();
        ((1.0 - decay) / lam, 1.0 / lam - (1.0 - decay) / (lam * lam * dt))
    } else {
        // Series in z to avoid cancellation.
        (
            dt * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0),
            dt * (0.5 - z / 6.0 + z * z / 24.0),
        )
    };
    let values: Vec<f64> = w
        .values
        .iter()
        .zip(u_old.values.iter().zip(&u_new.values))
        .map(|(wv, (uo, un))| decay * wv + ((phi1 - phi2) * uo + phi2 * un) / p.tau)
        .collect();
    RadialProfile::new(w.grid.clone(), values)
}

/// One IMEX finite-volume step of `u_t = Delta u - div(u grad v)`:
/// diffusion implicit (radial tridiagonal solve), advective face flux
/// `r u v_r` explicit with upwinding, zero flux at r = 0 and r = 1.
/// Total mass is preserved exactly (telescoping fluxes).
pub fn step_u(u: &RadialProfile, vr_faces: &[f64], dt: f64) -> Result<RadialProfile> {
    let grid = &u.grid;
    let n = grid.n;
    if vr_faces.len() != n + 1 {
        return Err(Error::invalid("step_u: vr_faces length must be n+1"));
    }
    if dt <= 0.0 {
        return Err(Error::invalid("step_u: dt must be positive"));
    }

    // Advective flux through internal faces (2 pi r vr * upwind u).
    let mut flux = vec![0.0; n + 1];
    for i in 1..n {
        let vr = vr_faces[i];
        let up = if vr > 0.0 {
            u.values[i - 1]
        } else if vr < 0.0 {
            u.values[i]
        } else {
            0.5 * (u.values[i - 1] + u.values[i])
        };
        flux[i] = 2.0 * PI * grid.r_faces[i] * vr * up;
    }

    // Diffusive conductances beta_i = 2 pi r_i / (c_i - c_{i-1}).
    let mut beta = vec![0.0; n + 1];
    for i in 1..n {
        beta[i] = 2.0 * PI * grid.r_faces[i] / (grid.r_centers[i] - grid.r_centers[i - 1]);
    }

    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let a = grid.cell_areas[i];
        diag[i] = a + dt * (beta[i] + beta[i + 1]);
        if i > 0 {
            lower[i] = -dt * beta[i];
        }
        if i + 1 < n {
            upper[i] = -dt * beta[i + 1];
        }
        rhs[i] = a * u.values[i] - dt * (flux[i + 1] - flux[i]);
    }
    let new = thomas(&lower, &diag, &upper, &rhs)?;
    RadialProfile::new(grid.clone(), new)
}

/// Tridiagonal solve (Thomas algorithm). The diffusion matrix is strictly
/// diagonally dominant, so no pivoting is needed.
pub(crate) fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::numerical("tridiagonal solve: zero pivot"));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::numerical("tridiagonal solve: singular pivot"));
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Largest advection-stable step for the current velocity field: the
/// explicit upwind part stays monotone when each cell loses at most half
/// its content per step.
fn advective_dt_limit(grid: &RadialGrid, vr_faces: &[f64]) -> f64 {
    let n = grid.n;
    let mut max_rate = 0.0f64;
    for i in 0..n {
        let outflow_left = 2.0 * PI * grid.r_faces[i] * (-vr_faces[i]).max(0.0);
        let outflow_right = 2.0 * PI * grid.r_faces[i + 1] * vr_faces[i + 1].max(0.0);
        max_rate = max_rate.max((outflow_left + outflow_right) / grid.cell_areas[i]);
    }
    if max_rate > 0.0 {
        0.5 / max_rate
    } else {
        f64::INFINITY
    }
}

fn state_from(t: f64, u: RadialProfile, w: RadialProfile) -> Result<PrimalState> {
    let mu = integrate_disk(&w)? / PI;
    let (v, vr_faces) = solve_v(&w, mu)?;
    Ok(PrimalState { t, u, w, v, vr_faces })
}

/// Loop `solve_v -> step_u -> step_w` from t = 0 to the horizon, recording
/// diagnostics at the configured cadence. The run terminates early (flagged,
/// not an error) when sup u exceeds the blow-up threshold.
pub fn run_primal(
    u0: &RadialProfile,
    w0: &RadialProfile,
    p: &ModelParams,
    cfg: &PrimalConfig,
) -> Result<PrimalRun> {
    if !Arc::ptr_eq(&u0.grid, &w0.grid) && u0.grid != w0.grid {
        return Err(Error::invalid("u0 and w0 must share a grid"));
    }
    if u0.values.iter().any(|v| *v < 0.0) || w0.values.iter().any(|v| *v < 0.0) {
        return Err(Error::invalid("initial data must be nonnegative"));
    }

    let grid = u0.grid.clone();
    let mut u = u0.clone();
    let mut w = w0.clone();
    let mut t = 0.0;
    let mut steps: u64 = 0;

    let mut trajectory = TrajectoryRecord::new(&TRAJECTORY_COLUMNS);
    let mut u_series = cfg.xi_diag.as_ref().map(|xg| ProfileSeries::new(xg.xi.clone()));
    let mut u_max_profile: Option<Vec<f64>> =
        cfg.umax_until.and(cfg.xi_diag.as_ref().map(|xg| vec![0.0; xg.len()]));
    let mut prev_recorded: Option<PrimalState> = None;

    let n_records = (cfg.t_end / cfg.record_every).round().max(1.0) as usize;
    let record = |state: &PrimalState,
                      prev: &Option<PrimalState>,
                      trajectory: &mut TrajectoryRecord,
                      u_series: &mut Option<ProfileSeries>,
                      u_max_profile: &mut Option<Vec<f64>>|
     -> Result<()> {
        let sup_u = state.u.max();
        let sup_w = state.w.max();
        let mass_u = integrate_disk(&state.u)?;
        let mass_w = integrate_disk(&state.w)?;
        let u_at_0 = state.u.values[0];
        let slope0 = 0.5 * u_at_0;
        let (lhs, rhs) = match prev {
            Some(ps) => crate::experiments::energy_sides(ps, state, p, cfg.energy_p)?,
            None => (f64::NAN, f64::NAN),
        };
        trajectory.push(vec![state.t, sup_u, sup_w, mass_u, mass_w, u_at_0, slope0, lhs, rhs]);
        if let (Some(series), Some(xg)) = (u_series.as_mut(), cfg.xi_diag.as_ref()) {
            let uxi = mass_function(&state.u, xg)?;
            if let (Some(maxp), Some(until)) = (u_max_profile.as_mut(), cfg.umax_until) {
                if state.t <= until + 1e-12 {
                    for (mx, v) in maxp.iter_mut().zip(&uxi) {
                        *mx = mx.max(*v);
                    }
                }
            }
            series.push(state.t, uxi);
        }
        Ok(())
    };

    let mut snapshots = Vec::new();
    let keep_snapshot = |state: &PrimalState, snapshots: &mut Vec<(f64, RadialProfile, RadialProfile)>| {
        if cfg.snapshot_times.iter().any(|ts| (ts - state.t).abs() < 1e-9) {
            snapshots.push((state.t, state.u.clone(), state.w.clone()));
        }
    };

    let mut state = state_from(t, u.clone(), w.clone())?;
    record(&state, &prev_recorded, &mut trajectory, &mut u_series, &mut u_max_profile)?;
    keep_snapshot(&state, &mut snapshots);
    prev_recorded = Some(state.clone());

    'outer: for k in 1..=n_records {
        let t_target = if k == n_records { cfg.t_end } else { k as f64 * cfg.record_every };
        let interval = t_target - t;
        if interval <= 0.0 {
            continue;
        }
        let n_steps = (interval / cfg.dt).ceil().max(1.0) as usize;
        let dt_nominal = interval / n_steps as f64;
        for _ in 0..n_steps {
            // CFL guard: subdivide until the explicit upwind part is monotone.
            let mu = integrate_disk(&w)? / PI;
            let (_, vr) = solve_v(&w, mu)?;
            let dt_cfl = advective_dt_limit(&grid, &vr);
            let n_sub = (dt_nominal / dt_cfl).ceil().max(1.0) as usize;
            let dt_sub = dt_nominal / n_sub as f64;
            for j in 0..n_sub {
                let (v_cur, vr_cur) = if j == 0 {
                    solve_v(&w, mu)?
                } else {
                    let mu_j = integrate_disk(&w)? / PI;
                    solve_v(&w, mu_j)?
                };
                let _ = v_cur;
                let u_new = step_u(&u, &vr_cur, dt_sub)?;
                let w_new = step_w(&w, &u, &u_new, p, dt_sub)?;
                u = u_new;
                w = w_new;
                steps += 1;
                let sup = u.max();
                if !sup.is_finite() {
                    return Err(Error::numerical(format!(
                        "NaN detected in u after {steps} steps (t ~ {t:.6})"
                    )));
                }
                if u.min() < -1e-12 * sup.max(1.0) {
                    return Err(Error::numerical(format!(
                        "negative undershoot {} after {steps} steps",
                        u.min()
                    )));
                }
            }
            t += dt_nominal;
        }
        t = t_target;
        state = state_from(t, u.clone(), w.clone())?;
        record(&state, &prev_recorded, &mut trajectory, &mut u_series, &mut u_max_profile)?;
        keep_snapshot(&state, &mut snapshots);
        prev_recorded = Some(state.clone());
        if state.u.max() > cfg.blowup_threshold {
            trajectory.blowup_flagged = true;
            break 'outer;
        }
    }

    Ok(PrimalRun { trajectory, final_state: state, u_series, u_max_profile, snapshots })
}
