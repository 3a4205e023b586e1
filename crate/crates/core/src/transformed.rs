//! Direct integration of the scalar nonlocal equation for the mass function
//! U on a xi-grid. The time-nonlocal term is reduced to a local memory field
//! I(xi, t) = int_0^t e^{-delta(t-s)/tau} (U(xi, s) - m xi/(2 pi)) ds, which
//! obeys  dI/dt = -(delta/tau) I + (U - m xi/(2 pi))  and is advanced by the
//! same exact-kernel exponential integrator as w in the primal solver.
//!
//! One step advances U by a single tridiagonal solve carrying both the
//! degenerate diffusion 4 xi U_xixi (coefficient evaluated at nodes, zero at
//! xi = 0) and the upwind-biased advection
//! 2 [ I/tau + (W0 - kappa0 xi) e^{-delta t/tau} ] U_xi.
//! Folding the advection into the implicit solve keeps the matrix an
//! M-matrix for any dt, so the update is unconditionally stable and monotone
//! even for the violently concentrated initial signals the grow-up data
//! construction produces. The Dirichlet pins U(0) = 0, U(1) = m/(2 pi) are
//! reimposed exactly after every step.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::primal::{thomas, PrimalConfig};
use crate::radial::XiGrid;
use crate::trajectory::{ProfileSeries, TrajectoryRecord};

/// Coefficients of the nonlocal operator that do not evolve: model
/// parameters and the initial-signal moments on the grid.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    pub p: ModelParams,
    pub xig: XiGrid,
    /// W0 at the grid nodes.
    pub w0_xi: Vec<f64>,
    pub kappa0: f64,
}

impl OperatorContext {
    pub fn new(p: ModelParams, xig: XiGrid, w0_xi: Vec<f64>, kappa0: f64) -> Result<Self> {
        if w0_xi.len() != xig.len() {
            return Err(Error::invalid("W0 sequence must match the xi grid"));
        }
        let last = *w0_xi.last().unwrap();
        if (last - kappa0).abs() > 1e-12 * kappa0.abs().max(1.0) {
            return Err(Error::invalid(format!(
                "W0(1) = {last} must equal kappa0 = {kappa0}"
            )));
        }
        Ok(Self { p, xig, w0_xi, kappa0 })
    }

    /// Context with w0 = 0 (W0 identically zero).
    pub fn without_signal(p: ModelParams, xig: XiGrid) -> Self {
        let n = xig.len();
        Self { p, xig, w0_xi: vec![0.0; n], kappa0: 0.0 }
    }

    /// Homogeneous boundary value m/(2 pi).
    pub fn boundary_value(&self) -> f64 {
        self.p.m / (2.0 * PI)
    }

    /// Advection speed 2 [ I/tau + (W0 - kappa0 xi) e^{-delta t/tau} ] at
    /// every node.
    pub fn velocity(&self, memory: &[f64], t: f64) -> Vec<f64> {
        let decay = (-self.p.lambda() * t).exp();
        self.xig
            .xi
            .iter()
            .zip(self.w0_xi.iter().zip(memory))
            .map(|(&xi, (&w0, &mem))| {
                2.0 * (mem / self.p.tau + (w0 - self.kappa0 * xi) * decay)
            })
            .collect()
    }
}

/// Transformed unknown and its memory field at one time level.
#[derive(Debug, Clone)]
pub struct MassState {
    pub t: f64,
    pub u: Vec<f64>,
    pub memory: Vec<f64>,
    /// Dirichlet value at xi = 1 (m/(2 pi) for a solution of the system;
    /// ordered-pair experiments may pin a smaller value).
    pub u_right: f64,
}

impl MassState {
    /// State at t = 0 with zero memory. Validates the Dirichlet pins and
    /// monotonicity (up to -1e-10 m undershoot) and then imposes the pins
    /// exactly.
    pub fn new(mut u0: Vec<f64>, ctx: &OperatorContext) -> Result<Self> {
        let n = ctx.xig.len();
        if u0.len() != n {
            return Err(Error::invalid("U0 must match the xi grid"));
        }
        if u0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("U0 must be finite"));
        }
        let bv = ctx.boundary_value();
        if u0[0].abs() > 1e-12 * bv {
            return Err(Error::invalid(format!("U0(0) = {} must vanish", u0[0])));
        }
        if (u0[n - 1] - bv).abs() > 1e-9 * bv {
            return Err(Error::invalid(format!(
                "U0(1) = {} must equal m/(2 pi) = {bv}",
                u0[n - 1]
            )));
        }
        let tol = -1e-10 * ctx.p.m;
        for w in u0.windows(2) {
            if w[1] - w[0] < tol {
                return Err(Error::invalid("U0 must be nondecreasing"));
            }
        }
        u0[0] = 0.0;
        u0[n - 1] = bv;
        Ok(Self { t: 0.0, u: u0, memory: vec![0.0; n], u_right: bv })
    }

    /// Like `new` but pins the right boundary to the given value instead of
    /// m/(2 pi) (ordered-pair comparisons evolve states of smaller mass
    /// under shared coefficients).
    pub fn with_boundary(mut u0: Vec<f64>, ctx: &OperatorContext, u_right: f64) -> Result<Self> {
        let n = ctx.xig.len();
        if u0.len() != n {
            return Err(Error::invalid("U0 must match the xi grid"));
        }
        u0[0] = 0.0;
        u0[n - 1] = u_right;
        Ok(Self { t: 0.0, u: u0, memory: vec![0.0; n], u_right })
    }

    /// Discrete slope U(xi_1)/xi_1, the one-sided mass-function slope at 0.
    pub fn slope_at_origin(&self, xig: &XiGrid) -> f64 {
        self.u[1] / xig.xi[1]
    }
}

/// Advance `u` by one implicit step under a frozen velocity field.
/// Diffusion 4 xi and upwinded advection share one tridiagonal M-matrix.
fn implicit_step(
    u: &[f64],
    velocity: &[f64],
    xig: &XiGrid,
    dt: f64,
    u_right: f64,
) -> Result<Vec<f64>> {
    let n = xig.len();
    let xi = &xig.xi;
    let ni = n - 2; // interior unknowns
    let mut lower = vec![0.0; ni];
    let mut diag = vec![0.0; ni];
    let mut upper = vec![0.0; ni];
    let mut rhs = vec![0.0; ni];
    for j in 1..(n - 1) {
        let hl = xi[j] - xi[j - 1];
        let hr = xi[j + 1] - xi[j];
        let k = j - 1;
        // Degenerate diffusion, coefficient 4 xi_j at the node.
        let d = 4.0 * xi[j];
        let cl = 2.0 * d / (hl * (hl + hr));
        let cr = 2.0 * d / (hr * (hl + hr));
        let mut a_l = cl;
        let mut a_d = -(cl + cr);
        let mut a_r = cr;
        // Upwind-biased advection c U_xi: forward difference for c > 0
        // (information moves toward the origin), backward for c < 0. The
        // zero-velocity tie-break is moot here (the term vanishes).
        let c = velocity[j];
        if c > 0.0 {
            a_d += -c / hr;
            a_r += c / hr;
        } else if c < 0.0 {
            a_d += c / hl;
            a_l += -c / hl;
        }
        lower[k] = -dt * a_l;
        diag[k] = 1.0 - dt * a_d;
        upper[k] = -dt * a_r;
        rhs[k] = u[j];
        if j == 1 {
            // U(0) = 0 contributes nothing.
            lower[k] = 0.0;
        }
        if j == n - 2 {
            rhs[k] += dt * a_r * u_right;
            upper[k] = 0.0;
        }
    }
    let interior = thomas(&lower, &diag, &upper, &rhs)?;
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    out.extend(interior);
    out.push(u_right);
    Ok(out)
}

/// Memory-field update: exact kernel decay, source linear in time between
/// the step endpoints (same phi-coefficients as the primal w update).
fn update_memory(
    memory: &mut [f64],
    u_old: &[f64],
    u_new: &[f64],
    ctx: &OperatorContext,
    dt: f64,
) {
    let p = &ctx.p;
    let z = p.lambda() * dt;
    let decay = (-z).exp();
    let (phi1, phi2) = if z > 1e-5 {
        let lam = p.lambda();
        ((1.0 - decay) / lam, 1.0 / lam - (1.0 - decay) / (lam * lam * dt))
    } else {
        (
            dt * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0),
            dt * (0.5 - z / 6.0 + z * z / 24.0),
        )
    };
    let slope = p.m / (2.0 * PI);
    let n = memory.len();
    for j in 0..n {
        let f_old = u_old[j] - slope * ctx.xig.xi[j];
        let f_new = u_new[j] - slope * ctx.xig.xi[j];
        memory[j] = decay * memory[j] + (phi1 - phi2) * f_old + phi2 * f_new;
    }
    // The integrand vanishes identically at the pinned ends.
    memory[0] = 0.0;
    memory[n - 1] = 0.0;
}

/// One step of the transformed solver: advance U implicitly under the
/// velocity built from the current memory field (drift evaluated at the new
/// time), then advance the memory from both U endpoints. Pins reimposed.
pub fn step_transformed(s: &MassState, ctx: &OperatorContext, dt: f64) -> Result<MassState> {
    if dt <= 0.0 {
        return Err(Error::invalid("step_transformed: dt must be positive"));
    }
    let velocity = ctx.velocity(&s.memory, s.t + dt);
    let u_new = implicit_step(&s.u, &velocity, &ctx.xig, dt, s.u_right)?;
    if u_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("NaN in transformed step"));
    }
    let mut memory = s.memory.clone();
    update_memory(&mut memory, &s.u, &u_new, ctx, dt);
    Ok(MassState { t: s.t + dt, u: u_new, memory, u_right: s.u_right })
}

/// Advance an ordered pair under ONE shared coefficient set (the upper
/// state's memory drives the velocity for both). The shared M-matrix makes
/// the discrete update monotone, which is what the ordering check exercises.
pub fn step_pair_shared(
    lower: &MassState,
    upper: &MassState,
    ctx: &OperatorContext,
    dt: f64,
) -> Result<(MassState, MassState)> {
    let velocity = ctx.velocity(&upper.memory, upper.t + dt);
    let lo_new = implicit_step(&lower.u, &velocity, &ctx.xig, dt, lower.u_right)?;
    let up_new = implicit_step(&upper.u, &velocity, &ctx.xig, dt, upper.u_right)?;
    let mut up_mem = upper.memory.clone();
    update_memory(&mut up_mem, &upper.u, &up_new, ctx, dt);
    let t = upper.t + dt;
    Ok((
        MassState { t, u: lo_new, memory: lower.memory.clone(), u_right: lower.u_right },
        MassState { t, u: up_new, memory: up_mem, u_right: upper.u_right },
    ))
}

pub const TRANSFORMED_COLUMNS: [&str; 8] = [
    "t",
    "sup_u",
    "mass_u",
    "u_at_0",
    "U_slope_0",
    "sup_U_over_xi",
    "min_slope",
    "memory_sup",
];

#[derive(Debug, Clone)]
pub struct TransformedRun {
    pub trajectory: TrajectoryRecord,
    pub series: ProfileSeries,
    pub memory_series: ProfileSeries,
    pub final_state: MassState,
}

fn diagnostics_row(s: &MassState, xig: &XiGrid) -> Vec<f64> {
    let xi = &xig.xi;
    let n = xi.len();
    let mut sup_u = f64::NEG_INFINITY;
    let mut min_slope = f64::INFINITY;
    let mut sup_ratio = f64::NEG_INFINITY;
    for j in 0..n - 1 {
        let slope = (s.u[j + 1] - s.u[j]) / (xi[j + 1] - xi[j]);
        sup_u = sup_u.max(2.0 * slope);
        min_slope = min_slope.min(slope);
    }
    for j in 1..n {
        sup_ratio = sup_ratio.max(s.u[j] / xi[j]);
    }
    let mem_sup = s.memory.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let slope0 = s.slope_at_origin(xig);
    vec![
        s.t,
        sup_u,
        2.0 * PI * s.u[n - 1],
        2.0 * slope0,
        slope0,
        sup_ratio,
        min_slope,
        mem_sup,
    ]
}

/// Step the transformed equation to the horizon, recording diagnostics and
/// U-profile snapshots at the configured cadence.
pub fn run_transformed(
    u0: Vec<f64>,
    ctx: &OperatorContext,
    cfg: &PrimalConfig,
) -> Result<TransformedRun> {
    let mut state = MassState::new(u0, ctx)?;
    run_from_state(&mut state, ctx, cfg)
}

pub fn run_from_state(
    state: &mut MassState,
    ctx: &OperatorContext,
    cfg: &PrimalConfig,
) -> Result<TransformedRun> {
    // dt guard: the memory integrator needs to resolve the kernel decay.
    let dt_guard = 0.1 * ctx.p.tau / ctx.p.delta.max(1.0);
    let dt_eff = cfg.dt.min(dt_guard);

    let mut trajectory = TrajectoryRecord::new(&TRANSFORMED_COLUMNS);
    let mut series = ProfileSeries::new(ctx.xig.xi.clone());
    let mut memory_series = ProfileSeries::new(ctx.xig.xi.clone());
    trajectory.push(diagnostics_row(state, &ctx.xig));
    series.push(state.t, state.u.clone());
    memory_series.push(state.t, state.memory.clone());

    let n_records = (cfg.t_end / cfg.record_every).round().max(1.0) as usize;
    let mut steps: u64 = 0;
    for k in 1..=n_records {
        let t_target = if k == n_records { cfg.t_end } else { k as f64 * cfg.record_every };
        let interval = t_target - state.t;
        if interval <= 0.0 {
            continue;
        }
        let n_steps = (interval / dt_eff).ceil().max(1.0) as usize;
        let dt = interval / n_steps as f64;
        for _ in 0..n_steps {
            *state = step_transformed(state, ctx, dt).map_err(|e| match e {
                Error::Numerical(msg) => Error::numerical(format!("{msg} (after {steps} steps)")),
                other => other,
            })?;
            steps += 1;
        }
        state.t = t_target;
        let row = diagnostics_row(state, &ctx.xig);
        let sup_u = row[1];
        trajectory.push(row);
        series.push(state.t, state.u.clone());
        memory_series.push(state.t, state.memory.clone());
        if sup_u > cfg.blowup_threshold {
            trajectory.blowup_flagged = true;
            break;
        }
    }
    Ok(TransformedRun { trajectory, series, memory_series, final_state: state.clone() })
}

/// Grid function handed to the operator evaluation: derivatives may be
/// supplied (analytic barriers) or left to central differencing.
#[derive(Debug, Clone, Copy)]
pub struct GridFunction<'a> {
    pub values: &'a [f64],
    pub d1: Option<&'a [f64]>,
    pub d2: Option<&'a [f64]>,
}

impl<'a> GridFunction<'a> {
    pub fn values_only(values: &'a [f64]) -> Self {
        Self { values, d1: None, d2: None }
    }
}

/// Nodewise residual of the nonlocal parabolic operator,
/// P[U] = U_t - 4 xi U_xixi - (2/tau) I U_xi - 2 (W0 - kappa0 xi) e^{-delta t/tau} U_xi,
/// with central differences on the (possibly nonuniform) grid wherever
/// derivatives are not supplied. Endpoint entries are returned as 0 (the
/// operator acts on the interior).
pub fn operator_residual(
    u: &GridFunction,
    ut: &[f64],
    memory: &[f64],
    ctx: &OperatorContext,
    t: f64,
) -> Result<Vec<f64>> {
    let n = ctx.xig.len();
    if u.values.len() != n || ut.len() != n || memory.len() != n {
        return Err(Error::invalid("operator_residual: grid size mismatch"));
    }
    let xi = &ctx.xig.xi;
    let decay = (-ctx.p.lambda() * t).exp();
    let mut out = vec![0.0; n];
    for j in 1..(n - 1) {
        let hl = xi[j] - xi[j - 1];
        let hr = xi[j + 1] - xi[j];
        let d1 = match u.d1 {
            Some(d) => d[j],
            None => {
                // Nonuniform central first difference.
                (-hr / (hl * (hl + hr))) * u.values[j - 1]
                    + ((hr - hl) / (hl * hr)) * u.values[j]
                    + (hl / (hr * (hl + hr))) * u.values[j + 1]
            }
        };
        let d2 = match u.d2 {
            Some(d) => d[j],
            None => {
                2.0 * (u.values[j - 1] / (hl * (hl + hr)) - u.values[j] / (hl * hr)
                    + u.values[j + 1] / (hr * (hl + hr)))
            }
        };
        let drift = 2.0 * (ctx.w0_xi[j] - ctx.kappa0 * xi[j]) * decay;
        out[j] = ut[j] - 4.0 * xi[j] * d2 - (2.0 / ctx.p.tau) * memory[j] * d1 - drift * d1;
    }
    Ok(out)
}

/// Direct quadrature of the memory convolution for one xi: trapezoid over
/// the recorded history samples. Test oracle for the auxiliary-ODE field.
pub fn memory_by_quadrature(
    history: &[(f64, f64)],
    ctx: &OperatorContext,
    xi: f64,
    t: f64,
) -> Result<f64> {
    if history.len() < 2 {
        return Err(Error::invalid("memory_by_quadrature: need at least 2 samples"));
    }
    if history[0].0 > 0.0 || history.last().unwrap().0 < t - 1e-12 {
        return Err(Error::invalid("memory_by_quadrature: samples must cover [0, t]"));
    }
    let lam = ctx.p.lambda();
    let slope = ctx.p.m / (2.0 * PI);
    let f = |s: f64, u: f64| (-lam * (t - s)).exp() * (u - slope * xi);
    let mut acc = 0.0;
    for w in history.windows(2) {
        let (s0, u0) = w[0];
        let (s1, u1) = w[1];
        if s0 >= t {
            break;
        }
        let s1c = s1.min(t);
        let u1c = if s1c < s1 { u0 + (u1 - u0) * (s1c - s0) / (s1 - s0) } else { u1 };
        acc += 0.5 * (f(s0, u0) + f(s1c, u1c)) * (s1c - s0);
    }
    Ok(acc)
}
