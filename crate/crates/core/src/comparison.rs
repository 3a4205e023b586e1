//! Explicit barrier constructions for the transformed equation: the rational
//! comparison family glued to an affine outer branch, the closed-form action
//! of the nonlocal operator on it, parameter recipes for the subcritical
//! supersolution and the supercritical subsolution, grow-up data
//! construction, and empirical ordering checks.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::quad;
use crate::radial::{integrate_disk, mass_function, w0_moments, RadialGrid, RadialProfile, XiGrid};
use crate::trajectory::ProfileSeries;
use crate::transformed::OperatorContext;

/// Parameter bundle of the two-branch comparison family:
/// inner branch a(t) xi / (b(t) + xi) on [0, xi0], affine outer branch on
/// (xi0, 1], with b(t) = b0 e^{-alpha t} and a(t) slaved to the boundary
/// value m/(2 pi).
#[derive(Debug, Clone, Copy)]
pub struct SubsolutionSpec {
    pub xi0: f64,
    pub b0: f64,
    pub alpha: f64,
    pub t0: f64,
    pub m: f64,
    pub eta: f64,
    pub eps: f64,
    pub c1: f64,
}

impl SubsolutionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi0 > 0.0 && self.xi0 < 1.0) {
            return Err(Error::invalid("xi0 must lie in (0,1)"));
        }
        if !(self.b0 > 0.0 && self.b0 < self.xi0 * self.xi0) {
            return Err(Error::invalid("b0 must lie in (0, xi0^2)"));
        }
        if !(self.alpha > 0.0 && self.m > 0.0 && self.eta > 0.0) {
            return Err(Error::invalid("alpha, m, eta must be positive"));
        }
        Ok(())
    }

    pub fn b(&self, t: f64) -> f64 {
        self.b0 * (-self.alpha * t).exp()
    }

    pub fn b_prime(&self, t: f64) -> f64 {
        -self.alpha * self.b(t)
    }

    /// a(t) = (m/2pi) (b+xi0)^2/(b+xi0^2), pinning the boundary value.
    pub fn a(&self, t: f64) -> f64 {
        let b = self.b(t);
        self.m / (2.0 * PI) * (b + self.xi0).powi(2) / (b + self.xi0 * self.xi0)
    }

    pub fn a_prime(&self, t: f64) -> f64 {
        let b = self.b(t);
        let x0 = self.xi0;
        self.m / (2.0 * PI) * (b * b + 2.0 * b * x0 * x0 - x0 * x0 + 2.0 * x0 * x0 * x0)
            / (b + x0 * x0).powi(2)
            * self.b_prime(t)
    }
}

/// Barrier value: rational inner branch, affine outer branch, continuous at
/// the glue point.
pub fn barrier_value(spec: &SubsolutionSpec, xi: f64, t: f64) -> f64 {
    let (a, b) = (spec.a(t), spec.b(t));
    if xi <= spec.xi0 {
        a * xi / (b + xi)
    } else {
        (a * b * xi + a * spec.xi0 * spec.xi0) / (b + spec.xi0).powi(2)
    }
}

/// Piecewise xi-derivative of the barrier.
pub fn barrier_d1(spec: &SubsolutionSpec, xi: f64, t: f64) -> f64 {
    let (a, b) = (spec.a(t), spec.b(t));
    if xi < spec.xi0 {
        a * b / (b + xi).powi(2)
    } else {
        a * b / (b + spec.xi0).powi(2)
    }
}

/// Piecewise second xi-derivative of the barrier.
pub fn barrier_d2(spec: &SubsolutionSpec, xi: f64, t: f64) -> f64 {
    let (a, b) = (spec.a(t), spec.b(t));
    if xi < spec.xi0 {
        -2.0 * a * b / (b + xi).powi(3)
    } else {
        0.0
    }
}

/// Piecewise time derivative of the barrier.
pub fn barrier_dt(spec: &SubsolutionSpec, xi: f64, t: f64) -> f64 {
    let (a, b) = (spec.a(t), spec.b(t));
    let (ap, bp) = (spec.a_prime(t), spec.b_prime(t));
    let x0 = spec.xi0;
    if xi < spec.xi0 {
        ap * xi / (b + xi) - a * bp * xi / (b + xi).powi(2)
    } else {
        (ap * b * xi + a * bp * xi + ap * x0 * x0) / (b + x0).powi(2)
            - 2.0 * (a * b * bp * xi + a * bp * x0 * x0) / (b + x0).powi(3)
    }
}

/// How the initial-signal excess W0(xi) - kappa0 xi enters a residual
/// evaluation: from a concrete signal, or replaced by the worst-case floor a
/// recipe assumes (certificates then hold for every admissible w0).
#[derive(Debug, Clone, Copy)]
pub enum SignalTerm<'a> {
    /// Interpolate W0 from the context's grid.
    Exact(&'a OperatorContext),
    /// W0 - kappa0 xi := eta0 (1 - xi) (outer concentration hypothesis).
    OuterFloor { eta0: f64 },
    /// W0/xi - kappa0 := gamma0 (inner concentration hypothesis).
    InnerFloor { gamma0: f64 },
    /// W0 - kappa0 xi := 0 (bare nonnegativity).
    Zero,
}

impl<'a> SignalTerm<'a> {
    /// W0(xi) - kappa0 xi under this model.
    pub fn excess(&self, xi: f64) -> f64 {
        match self {
            SignalTerm::Exact(ctx) => interp(&ctx.xig.xi, &ctx.w0_xi, xi) - ctx.kappa0 * xi,
            SignalTerm::OuterFloor { eta0 } => eta0 * (1.0 - xi),
            SignalTerm::InnerFloor { gamma0 } => gamma0 * xi,
            SignalTerm::Zero => 0.0,
        }
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let j = xs.partition_point(|v| *v < x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = (x - x0) / (x1 - x0);
    ys[j - 1] + w * (ys[j] - ys[j - 1])
}

/// Exponential-kernel time integral
/// int_0^t e^{-delta(t-s)/tau} g(s) ds by adaptive quadrature.
fn kernel_integral(p: &ModelParams, t: f64, g: impl Fn(f64) -> f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let lam = p.lambda();
    let f = |s: f64| (-lam * (t - s)).exp() * g(s);
    let scale = f(t).abs().max(f(0.0).abs());
    quad::integrate(f, 0.0, t, 1e-12 * (1.0 + scale))
}

/// Residual of the operator on the inner branch (0 < xi < xi0): the
/// closed-form bracket times the prefactor a b xi/(b+xi)^2. Negative values
/// certify the subsolution property at the sampled point.
pub fn barrier_residual_inner(
    spec: &SubsolutionSpec,
    p: &ModelParams,
    signal: &SignalTerm,
    xi: f64,
    t: f64,
) -> f64 {
    let (a, b) = (spec.a(t), spec.b(t));
    let half_slope = spec.m / (2.0 * PI);
    let integral = kernel_integral(p, t, |s| {
        let bs = spec.b(s);
        spec.a(s) / (bs + xi) - half_slope
    });
    let decay = (-p.lambda() * t).exp();
    let bracket = spec.a_prime(t) * (b + xi) / (a * b) - spec.b_prime(t) / b
        + 8.0 / (b + xi)
        - (2.0 / p.tau) * integral
        - 2.0 * (signal.excess(xi) / xi) * decay;
    a * b * xi / (b + xi).powi(2) * bracket
}

/// Residual of the operator on the outer branch (xi0 < xi < 1): the
/// closed-form bracket times the prefactor a b/(b+xi0)^2.
pub fn barrier_residual_outer(
    spec: &SubsolutionSpec,
    p: &ModelParams,
    signal: &SignalTerm,
    xi: f64,
    t: f64,
) -> f64 {
    let (a, b) = (spec.a(t), spec.b(t));
    let x0 = spec.xi0;
    let half_slope = spec.m / (2.0 * PI);
    let integral = kernel_integral(p, t, |s| {
        let (as_, bs) = (spec.a(s), spec.b(s));
        (as_ * bs * xi + as_ * x0 * x0) / (bs + x0).powi(2) - half_slope * xi
    });
    let decay = (-p.lambda() * t).exp();
    let bracket = outer_drift_part(spec, xi, t) - (2.0 / p.tau) * integral
        - 2.0 * signal.excess(xi) * decay;
    a * b / (b + x0).powi(2) * bracket
}

/// The time/diffusion part of the normalized outer residual,
/// J1 = a' xi/a + b' xi/b + a' xi0^2/(a b) - 2 (b' xi + (b'/b) xi0^2)/(b+xi0).
pub fn outer_drift_part(spec: &SubsolutionSpec, xi: f64, t: f64) -> f64 {
    let (a, b) = (spec.a(t), spec.b(t));
    let (ap, bp) = (spec.a_prime(t), spec.b_prime(t));
    let x0 = spec.xi0;
    ap * xi / a + bp * xi / b + ap * x0 * x0 / (a * b)
        - 2.0 * (bp * xi + bp / b * x0 * x0) / (b + x0)
}

/// Closed form of the same quantity: -(b'/b) xi0^2 (1-xi)/(b+xi0^2).
pub fn outer_drift_part_closed(spec: &SubsolutionSpec, xi: f64, t: f64) -> f64 {
    let b = spec.b(t);
    let x0 = spec.xi0;
    -(spec.b_prime(t) / b) * x0 * x0 * (1.0 - xi) / (b + x0 * x0)
}

/// Exact memory field of the barrier at one point: the exponential-kernel
/// integral of barrier(xi, s) - (m/2pi) xi s, by adaptive quadrature.
pub fn barrier_memory(spec: &SubsolutionSpec, p: &ModelParams, xi: f64, t: f64) -> f64 {
    let half_slope = spec.m / (2.0 * PI);
    kernel_integral(p, t, |s| barrier_value(spec, xi, s) - half_slope * xi)
}

/// c1 margin of the inner recipe: (1-eps)^3 m/((1+eps) pi delta) - 8.
pub fn inner_margin(eps: f64, m: f64, delta: f64) -> f64 {
    (1.0 - eps).powi(3) * m / ((1.0 + eps) * PI * delta) - 8.0
}

/// Output of the inner-region parameter recipe.
#[derive(Debug, Clone, Copy)]
pub struct InnerParams {
    pub eps: f64,
    pub c1: f64,
    pub alpha_star: f64,
    pub xi0: f64,
    /// True when delta = 0 and the degenerate-limit path was taken.
    pub limit_case: bool,
}

/// Inner recipe: pick eps by bisection (largest eps in (0, 1/2] keeping the
/// c1 margin positive, then halved), the rate cap alpha_star as the min of
/// the two admissible bounds, and the glue point xi0 = eps/2.
///
/// For delta = 0 the margin degenerates (the kernel integral lower bound
/// grows without bound), so any eps in (0, 1/2] is admissible and the rate
/// bound from the kernel drops; eps is fixed at 1/4 for determinism.
pub fn choose_inner_params(p: &ModelParams) -> Result<InnerParams> {
    let critical = p.critical_mass();
    if p.m <= critical {
        return Err(Error::SupercriticalityViolated { m: p.m, critical });
    }
    if p.delta == 0.0 {
        let eps = 0.25;
        return Ok(InnerParams {
            eps,
            c1: f64::INFINITY,
            alpha_star: f64::INFINITY,
            xi0: eps / 2.0,
            limit_case: true,
        });
    }
    // c1(eps) is strictly decreasing; find the largest admissible eps.
    let eps_max = if inner_margin(0.5, p.m, p.delta) > 0.0 {
        0.5
    } else {
        let (mut lo, mut hi) = (0.0f64, 0.5f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if inner_margin(mid, p.m, p.delta) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let eps = 0.5 * eps_max;
    let c1 = inner_margin(eps, p.m, p.delta);
    if c1 <= 0.0 {
        return Err(Error::numerical("inner recipe produced a nonpositive margin"));
    }
    let rate_cap = p.delta * (1.0 / (1.0 - eps)).ln() / (p.tau * (1.0 / eps).ln());
    Ok(InnerParams {
        eps,
        c1,
        alpha_star: (c1 / 4.0).min(rate_cap),
        xi0: eps / 2.0,
        limit_case: false,
    })
}

/// Outer rate choice: 0.9 of
/// min{ m/(2 pi tau e^{delta/tau}), 2 eta0/e^{2 delta/tau}, alpha_star }.
pub fn choose_outer_alpha(p: &ModelParams, eta0: f64, alpha_star: f64) -> Result<f64> {
    if !(eta0 > 0.0 && alpha_star > 0.0) {
        return Err(Error::invalid("eta0 and alpha_star must be positive"));
    }
    let e1 = (p.delta / p.tau).exp();
    let alpha0 = (p.m / (2.0 * PI * p.tau * e1))
        .min(2.0 * eta0 / (e1 * e1))
        .min(alpha_star);
    Ok(0.9 * alpha0)
}

/// Pole offset and activation time with factor-2 margins:
/// b0 = eps xi0^2 / 2, t0 = (2/alpha) ln(1/(1-eps)).
pub fn choose_b0_t0(alpha: f64, eps: f64, xi0: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && eps > 0.0 && eps < 1.0 && xi0 > 0.0 && xi0 < 1.0) {
        return Err(Error::invalid("choose_b0_t0: parameters out of range"));
    }
    let b0 = 0.5 * eps * xi0 * xi0;
    let t0 = 2.0 / alpha * (1.0 / (1.0 - eps)).ln();
    Ok((b0, t0))
}

/// Early-time concentration floor for the initial signal:
/// (1/2) { (1/xi0 + 1) alpha + (8/b0) e^{alpha t0} } e^{delta t0/tau}.
pub fn w0_excess_floor(alpha: f64, b0: f64, xi0: f64, t0: f64, p: &ModelParams) -> Result<f64> {
    if !(alpha > 0.0 && b0 > 0.0 && xi0 > 0.0 && t0 > 0.0) {
        return Err(Error::invalid("w0_excess_floor: parameters must be positive"));
    }
    Ok(0.5
        * ((1.0 / xi0 + 1.0) * alpha + 8.0 / b0 * (alpha * t0).exp())
        * (p.delta * t0 / p.tau).exp())
}

/// The full constant set guaranteeing exponential grow-up for concentrated
/// supercritical data, assembled by chaining the recipes.
#[derive(Debug, Clone, Copy)]
pub struct GrowupConstants {
    /// Concentration radius sqrt(xi0).
    pub radius: f64,
    /// Required inner average of u0.
    pub gamma_u: f64,
    /// Allowed outer average of u0.
    pub gamma_tail: f64,
    /// Required inner-average excess of w0.
    pub gamma_w: f64,
    /// Early-time signal floor (gamma_w / 2).
    pub w0_floor: f64,
    /// Outer concentration level eta0 = eta/2.
    pub eta0: f64,
    pub spec: SubsolutionSpec,
    pub limit_case: bool,
}

pub fn growup_constants(p: &ModelParams, eta: f64) -> Result<GrowupConstants> {
    if eta <= 0.0 {
        return Err(Error::invalid("eta must be positive"));
    }
    let inner = choose_inner_params(p)?;
    let eta0 = eta / 2.0;
    let alpha = choose_outer_alpha(p, eta0, inner.alpha_star)?;
    let (b0, t0) = choose_b0_t0(alpha, inner.eps, inner.xi0)?;
    let w0_floor = w0_excess_floor(alpha, b0, inner.xi0, t0, p)?;
    let x0 = inner.xi0;
    let gamma_u = p.m / PI * (b0 + x0).powi(2) / (b0 * (b0 + x0 * x0));
    let gamma_tail = p.m / PI * b0 / (b0 + x0 * x0);
    let spec = SubsolutionSpec {
        xi0: x0,
        b0,
        alpha,
        t0,
        m: p.m,
        eta,
        eps: inner.eps,
        c1: inner.c1,
    };
    spec.validate()?;
    Ok(GrowupConstants {
        radius: x0.sqrt(),
        gamma_u,
        gamma_tail,
        gamma_w: 2.0 * w0_floor,
        w0_floor,
        eta0,
        spec,
        limit_case: inner.limit_case,
    })
}

/// Grid-checked margins of the constructed grow-up data.
#[derive(Debug, Clone)]
pub struct DataReport {
    /// Largest grid face up to which the literal inner-average condition on
    /// u0 holds. The condition is incompatible with the mass constraint for
    /// r^2 >> b0, so this is expected to sit near sqrt(b0), far below the
    /// concentration radius.
    pub inner_avg_holds_until: f64,
    /// min over grid nodes of U0(xi) - barrier(xi, 0) (must be >= 0).
    pub ordering_margin: f64,
    /// min over outer faces of gamma_tail - outer average of u0.
    pub u_tail_margin: f64,
    /// min over inner faces of inner w0 average - (global mean + gamma_w).
    pub w_inner_margin: f64,
    /// min over outer faces of (global mean - eta) - outer average of w0.
    pub w_tail_margin: f64,
}

/// Smoothed flat-top bump: 1 for r <= r_in, cosine falloff to 0 at r_out.
fn bump(r: f64, r_in: f64, r_out: f64) -> f64 {
    if r <= r_in {
        1.0
    } else if r >= r_out {
        0.0
    } else {
        let s = (r - r_in) / (r_out - r_in);
        (0.5 * PI * s).cos().powi(2)
    }
}

/// Build concentrated radial data for a grow-up run: u0 carries the whole
/// mass m inside a ball sized so the mass function dominates the barrier at
/// t = 0 with margin; w0 is a smoothed indicator inside the concentration
/// radius sized so the signal conditions hold with margin. The verification
/// pass evaluates every condition on the grid and fails loudly on violation.
pub fn build_growup_data(
    consts: &GrowupConstants,
    p: &ModelParams,
    grid: &std::sync::Arc<RadialGrid>,
) -> Result<(RadialProfile, RadialProfile, DataReport)> {
    let spec = &consts.spec;
    let margin = 1.1;

    // u0: amplitude 1.1 gamma_u, radius chosen so the total mass is m.
    let amp_u = margin * consts.gamma_u;
    // First pass with fill factor of the r^2-measure ~ 0.8 for the 0.8
    // flat-top ratio, then rescale to make the mass exactly m.
    let rho_out = (p.m / (amp_u * PI * 0.8)).sqrt();
    let rho_in = 0.8 * rho_out;
    if rho_in < grid.r_faces[2] {
        return Err(Error::Construction(format!(
            "grid too coarse near the origin: bump core {rho_in:.3e} is under two cells; \
             use a grid refined near r = 0"
        )));
    }
    let shape_u = RadialProfile::from_fn(grid.clone(), |r| bump(r, rho_in, rho_out))?;
    let shape_mass = integrate_disk(&shape_u)?;
    if shape_mass <= 0.0 {
        return Err(Error::Construction("u0 bump not resolved on the grid".into()));
    }
    let scale_u = p.m / shape_mass;
    let u0 = RadialProfile::new(
        grid.clone(),
        shape_u.values.iter().map(|v| v * scale_u).collect(),
    )?;

    // w0: smoothed indicator supported inside the concentration radius,
    // scaled so the inner average clears the global mean by gamma_w.
    let r_cap = consts.radius;
    let w_in = 0.80 * r_cap;
    let w_out = 0.95 * r_cap;
    let shape_w = RadialProfile::from_fn(grid.clone(), |r| bump(r, w_in, w_out))?;
    let shape_w_mass = integrate_disk(&shape_w)?;
    if shape_w_mass <= 0.0 {
        return Err(Error::Construction("w0 bump not resolved on the grid".into()));
    }
    // Required kappa0 from the binding case r -> radius:
    // inner average >= global mean + gamma_w with margin.
    let xi0 = spec.xi0;
    let kappa0_target = margin * consts.gamma_w * xi0 / (2.0 * (1.0 - xi0));
    let w0_mass_target = 2.0 * PI * kappa0_target;
    let scale_w = w0_mass_target / shape_w_mass;
    let w0 = RadialProfile::new(
        grid.clone(),
        shape_w.values.iter().map(|v| v * scale_w).collect(),
    )?;

    let report = verify_growup_data(consts, p, &u0, &w0)?;
    Ok((u0, w0, report))
}

/// Evaluate the four averaged conditions plus the sharp initial ordering on
/// the grid. Errors on violation of any satisfiable condition.
pub fn verify_growup_data(
    consts: &GrowupConstants,
    p: &ModelParams,
    u0: &RadialProfile,
    w0: &RadialProfile,
) -> Result<DataReport> {
    let spec = &consts.spec;
    let grid = &u0.grid;
    let n = grid.n;
    let mass = integrate_disk(u0)?;
    if ((mass - p.m) / p.m).abs() > 1e-10 {
        return Err(Error::Construction(format!(
            "u0 mass {mass} differs from m = {}",
            p.m
        )));
    }

    // Cumulative masses at faces (exact for cellwise-constant data).
    let mut cum_u = vec![0.0; n + 1];
    let mut cum_w = vec![0.0; n + 1];
    for i in 0..n {
        cum_u[i + 1] = cum_u[i] + u0.values[i] * grid.cell_areas[i];
        cum_w[i + 1] = cum_w[i] + w0.values[i] * grid.cell_areas[i];
    }
    let w_mean = cum_w[n] / PI;

    // Literal inner-average condition on u0; record the feasible prefix.
    let mut inner_avg_holds_until = 0.0;
    let mut prefix_intact = true;
    for i in 1..=n {
        let r = grid.r_faces[i];
        if r >= consts.radius {
            break;
        }
        let avg = cum_u[i] / (PI * r * r);
        if avg >= consts.gamma_u && prefix_intact {
            inner_avg_holds_until = r;
        } else {
            prefix_intact = false;
        }
    }
    // It must at least hold across the bump core.
    if inner_avg_holds_until <= 0.0 {
        return Err(Error::Construction(
            "inner-average condition on u0 fails even at the first face".into(),
        ));
    }

    // Sharp initial ordering U0 >= barrier(., 0) at the face xi-values.
    let mut ordering_margin = f64::INFINITY;
    for i in 1..=n {
        let xi = grid.r_faces[i] * grid.r_faces[i];
        let u_val = cum_u[i] / (2.0 * PI);
        let bar = barrier_value(spec, xi, 0.0);
        ordering_margin = ordering_margin.min(u_val - bar);
    }
    // Both sides equal m/(2 pi) exactly at xi = 1, so the margin carries
    // roundoff there; anything below a few ulps of the mass scale is real.
    if ordering_margin < -1e-12 * p.m {
        return Err(Error::Construction(format!(
            "initial mass function dips below the barrier by {ordering_margin:.3e}; \
             refine the grid or enlarge the data margin"
        )));
    }

    // Outer tail condition on u0.
    let mut u_tail_margin = f64::INFINITY;
    for i in 0..n {
        let r = grid.r_faces[i];
        if r <= consts.radius || r >= 1.0 {
            continue;
        }
        let tail_avg = (cum_u[n] - cum_u[i]) / (PI * (1.0 - r * r));
        u_tail_margin = u_tail_margin.min(consts.gamma_tail - tail_avg);
    }
    if u_tail_margin < 0.0 {
        return Err(Error::Construction("u0 tail average exceeds its bound".into()));
    }

    // Signal conditions.
    let mut w_inner_margin = f64::INFINITY;
    let mut w_tail_margin = f64::INFINITY;
    for i in 1..=n {
        let r = grid.r_faces[i];
        if r < consts.radius {
            let avg = cum_w[i] / (PI * r * r);
            w_inner_margin = w_inner_margin.min(avg - (w_mean + consts.gamma_w));
        } else if r < 1.0 {
            let tail_avg = (cum_w[n] - cum_w[i]) / (PI * (1.0 - r * r));
            w_tail_margin = w_tail_margin.min((w_mean - spec.eta) - tail_avg);
        }
    }
    if w_inner_margin < 0.0 {
        return Err(Error::Construction(format!(
            "w0 inner-average excess misses gamma_w by {w_inner_margin:.3e}"
        )));
    }
    if w_tail_margin < 0.0 {
        return Err(Error::Construction(format!(
            "w0 tail average violates the eta condition by {w_tail_margin:.3e}"
        )));
    }

    Ok(DataReport {
        inner_avg_holds_until,
        ordering_margin,
        u_tail_margin,
        w_inner_margin,
        w_tail_margin,
    })
}

/// Largest grid-verified b in (0,1) such that
/// phi(xi) <= (m/2pi) (b+1+eps) xi/(b+xi) at every node.
pub fn fit_rational_envelope(phi: &[f64], xig: &XiGrid, m: f64, eps: f64) -> Result<f64> {
    if phi.len() != xig.len() {
        return Err(Error::invalid("phi must match the xi grid"));
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("phi must be finite"));
    }
    let cap = m / (2.0 * PI);
    if phi[0].abs() > 1e-12 * cap {
        return Err(Error::invalid(format!("phi(0) = {} must vanish", phi[0])));
    }
    if phi.iter().any(|v| *v > cap * (1.0 + 1e-9)) {
        return Err(Error::invalid("phi must be bounded by m/(2 pi)"));
    }
    let ok = |b: f64| -> bool {
        xig.xi
            .iter()
            .zip(phi)
            .skip(1)
            .all(|(&xi, &v)| v <= cap * (b + 1.0 + eps) * xi / (b + xi) * (1.0 + 1e-14))
    };
    if !ok(1e-300) {
        return Err(Error::numerical(
            "no admissible envelope offset exists on this grid",
        ));
    }
    if ok(1.0 - 1e-15) {
        return Ok(1.0 - 1e-15);
    }
    let (mut lo, mut hi) = (1e-300f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Subcritical supersolution parameters.
#[derive(Debug, Clone, Copy)]
pub struct SupersolutionBound {
    pub eps: f64,
    pub t0: f64,
    pub b: f64,
    pub a: f64,
    /// Slope bound: U(xi, t) <= big_c * xi.
    pub big_c: f64,
}

/// Activation time of the supersolution argument: smallest t0 with
/// 8 >= (m/(pi delta))(1+eps) + 4 c1 e^{-delta t0/tau}, c1 = |w0|_inf / 2.
pub fn supersolution_eps_t0(p: &ModelParams, w0_supnorm: f64) -> Result<(f64, f64)> {
    let critical = p.critical_mass();
    if p.m >= critical || p.delta == 0.0 {
        return Err(Error::SubcriticalityViolated { m: p.m, critical });
    }
    // eps with 50% slack below the admissible maximum 8 pi delta/m - 1.
    let eps = 0.5 * (critical / p.m - 1.0);
    let gap = 8.0 - p.m / (PI * p.delta) * (1.0 + eps);
    debug_assert!(gap > 0.0);
    let c1 = 0.5 * w0_supnorm;
    let t0 = if 4.0 * c1 <= gap {
        0.0
    } else {
        p.tau / p.delta * (4.0 * c1 / gap).ln()
    };
    Ok((eps, t0))
}

/// Full supersolution construction: eps and t0 from the mass/signal margins,
/// the envelope offset b fitted to the recorded max of U over [0, t0], and
/// the resulting slope bound C = m (b+1+eps)/(2 pi b).
pub fn supersolution_bound(
    p: &ModelParams,
    w0_supnorm: f64,
    u_max_profile: &[f64],
    xig: &XiGrid,
) -> Result<SupersolutionBound> {
    let (eps, t0) = supersolution_eps_t0(p, w0_supnorm)?;
    let b = fit_rational_envelope(u_max_profile, xig, p.m, eps)?;
    let a = p.m / (2.0 * PI) * (b + 1.0 + eps);
    Ok(SupersolutionBound { eps, t0, b, a, big_c: a / b })
}

/// Residual of the operator on the stationary rational supersolution
/// a xi/(b+xi): nonnegative values certify the supersolution property.
pub fn supersolution_residual(
    bound: &SupersolutionBound,
    p: &ModelParams,
    signal: &SignalTerm,
    xi: f64,
    t: f64,
) -> f64 {
    let (a, b) = (bound.a, bound.b);
    let half_slope = p.m / (2.0 * PI);
    // Memory kernel integral in closed form (a, b constant in time).
    let kernel = if p.delta > 0.0 {
        -(p.tau / p.delta) * (-p.lambda() * t).exp_m1()
    } else {
        t
    };
    let decay = (-p.lambda() * t).exp();
    let bracket = 8.0 / (b + xi)
        - (2.0 / p.tau) * kernel * (a / (b + xi) - half_slope)
        - 2.0 * (signal.excess(xi) / xi) * decay;
    a * b * xi / (b + xi).powi(2) * bracket
}

/// Result of a pointwise sign certificate over a sample set.
#[derive(Debug, Clone)]
pub struct BarrierReport {
    pub region: String,
    pub max_residual: f64,
    /// Sample points violating the sign condition (capped at 16 entries).
    pub violating_points: Vec<(f64, f64)>,
    pub passed: bool,
    pub samples: usize,
    /// Every sampled (xi, t, residual), sign-adjusted so that positive
    /// values are violations.
    pub residuals: Vec<(f64, f64, f64)>,
}

impl BarrierReport {
    /// CSV of the sampled residual field.
    pub fn residuals_csv(&self) -> String {
        use crate::radial::fmt_g17;
        let mut out = String::from("xi,t,residual\n");
        for (xi, t, r) in &self.residuals {
            out.push_str(&fmt_g17(*xi));
            out.push(',');
            out.push_str(&fmt_g17(*t));
            out.push(',');
            out.push_str(&fmt_g17(*r));
            out.push('\n');
        }
        out
    }
}

impl BarrierReport {
    pub fn summary(&self) -> String {
        format!(
            "{}: {} max residual {:.3e} over {} samples{}",
            self.region,
            if self.passed { "PASS" } else { "FAIL" },
            self.max_residual,
            self.samples,
            if self.violating_points.is_empty() {
                String::new()
            } else {
                format!(" ({} violations)", self.violating_points.len())
            }
        )
    }
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn sign_certificate(
    region: &str,
    xis: &[f64],
    ts: &[f64],
    mut residual: impl FnMut(f64, f64) -> f64,
    flip: bool,
) -> BarrierReport {
    let slack = 1e-12;
    let mut max_residual = f64::NEG_INFINITY;
    let mut violating_points = Vec::new();
    let mut residuals = Vec::with_capacity(xis.len() * ts.len());
    for &t in ts {
        for &xi in xis {
            let mut r = residual(xi, t);
            if flip {
                r = -r;
            }
            max_residual = max_residual.max(r);
            if r > slack && violating_points.len() < 16 {
                violating_points.push((xi, t));
            }
            residuals.push((xi, t, r));
        }
    }
    BarrierReport {
        region: region.to_string(),
        max_residual,
        passed: max_residual <= slack,
        violating_points,
        samples: xis.len() * ts.len(),
        residuals,
    }
}

/// Subsolution certificate on the outer branch: residual <= 0 for
/// t in (0, t_max] under the outer concentration floor.
pub fn certify_outer(
    spec: &SubsolutionSpec,
    p: &ModelParams,
    eta0: f64,
    t_max: f64,
    n_xi: usize,
    n_t: usize,
) -> BarrierReport {
    let xis: Vec<f64> = (1..=n_xi)
        .map(|i| spec.xi0 + (1.0 - spec.xi0) * i as f64 / (n_xi + 1) as f64)
        .collect();
    let ts: Vec<f64> = (1..=n_t).map(|i| t_max * i as f64 / n_t as f64).collect();
    let signal = SignalTerm::OuterFloor { eta0 };
    sign_certificate(
        "outer subsolution",
        &xis,
        &ts,
        |xi, t| barrier_residual_outer(spec, p, &signal, xi, t),
        false,
    )
}

/// Subsolution certificate on the inner branch for t >= t0 (bare
/// nonnegativity of the signal excess suffices there).
pub fn certify_inner_late(
    spec: &SubsolutionSpec,
    p: &ModelParams,
    t_max: f64,
    n_xi: usize,
    n_t: usize,
) -> BarrierReport {
    let xis = log_spaced(spec.xi0 * 1e-6, spec.xi0 * (1.0 - 1e-9), n_xi);
    let ts: Vec<f64> = (0..n_t)
        .map(|i| spec.t0 + (t_max - spec.t0) * i as f64 / (n_t - 1) as f64)
        .collect();
    let signal = SignalTerm::Zero;
    sign_certificate(
        "inner subsolution (late)",
        &xis,
        &ts,
        |xi, t| barrier_residual_inner(spec, p, &signal, xi, t),
        false,
    )
}

/// Subsolution certificate on the inner branch for 0 < t < t0 under the
/// early-time signal floor.
pub fn certify_inner_early(
    spec: &SubsolutionSpec,
    p: &ModelParams,
    gamma0: f64,
    n_xi: usize,
    n_t: usize,
) -> BarrierReport {
    let xis = log_spaced(spec.xi0 * 1e-6, spec.xi0 * (1.0 - 1e-9), n_xi);
    let ts: Vec<f64> = (1..=n_t).map(|i| spec.t0 * i as f64 / (n_t + 1) as f64).collect();
    let signal = SignalTerm::InnerFloor { gamma0 };
    sign_certificate(
        "inner subsolution (early)",
        &xis,
        &ts,
        |xi, t| barrier_residual_inner(spec, p, &signal, xi, t),
        false,
    )
}

/// Supersolution certificate: residual >= 0 for t > t0 with the run's
/// actual initial signal.
pub fn certify_supersolution(
    bound: &SupersolutionBound,
    p: &ModelParams,
    ctx: &OperatorContext,
    t_max: f64,
    n_xi: usize,
    n_t: usize,
) -> BarrierReport {
    let xis = log_spaced(1e-8, 1.0 - 1e-9, n_xi);
    let t_lo = bound.t0.max(1e-9);
    let ts: Vec<f64> = (1..=n_t)
        .map(|i| t_lo + (t_max - t_lo) * i as f64 / n_t as f64)
        .collect();
    let signal = SignalTerm::Exact(ctx);
    sign_certificate(
        "supersolution",
        &xis,
        &ts,
        |xi, t| supersolution_residual(bound, p, &signal, xi, t),
        true,
    )
}

/// Result of the empirical ordering check.
#[derive(Debug, Clone)]
pub struct OrderingReport {
    /// max over recorded (xi, t) of lower - upper.
    pub max_violation: f64,
    pub worst_point: (f64, f64),
    pub passed: bool,
}

/// Empirical ordering check between two recorded series on matched grids
/// and times: passes when lower <= upper up to 1e-8 m everywhere.
pub fn compare_trajectories(
    lower: &ProfileSeries,
    upper: &ProfileSeries,
    m: f64,
) -> Result<OrderingReport> {
    if !lower.matches_layout(upper) {
        return Err(Error::invalid("ordering check needs matched grids and times"));
    }
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_point = (0.0, 0.0);
    for (k, t) in lower.times.iter().enumerate() {
        for (j, xi) in lower.xi.iter().enumerate() {
            let gap = lower.values[k][j] - upper.values[k][j];
            if gap > max_violation {
                max_violation = gap;
                worst_point = (*xi, *t);
            }
        }
    }
    Ok(OrderingReport { max_violation, worst_point, passed: max_violation <= 1e-8 * m })
}

/// Barrier sampled on the nodes/times of a recorded run, for ordering checks
/// against the solver output.
pub fn barrier_series(spec: &SubsolutionSpec, xi: &[f64], times: &[f64]) -> ProfileSeries {
    let mut series = ProfileSeries::new(xi.to_vec());
    for &t in times {
        series.push(t, xi.iter().map(|&x| barrier_value(spec, x, t)).collect());
    }
    series
}

/// Transformed-solver context built from concrete radial data.
pub fn context_from_data(
    p: &ModelParams,
    w0: &RadialProfile,
    xig: &XiGrid,
) -> Result<OperatorContext> {
    let (w0_xi, kappa0) = w0_moments(w0, xig)?;
    OperatorContext::new(*p, xig.clone(), w0_xi, kappa0)
}

/// Initial mass function of concrete radial data on a xi grid, with the
/// boundary pinned to exactly m/(2 pi).
pub fn initial_mass_function(
    u0: &RadialProfile,
    p: &ModelParams,
    xig: &XiGrid,
) -> Result<Vec<f64>> {
    let mut vals = mass_function(u0, xig)?;
    let bv = p.m / (2.0 * PI);
    let last = vals.len() - 1;
    if ((vals[last] - bv) / bv).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "data mass {} is inconsistent with m = {}",
            vals[last] * 2.0 * PI,
            p.m
        )));
    }
    vals[last] = bv;
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_spec() -> SubsolutionSpec {
        SubsolutionSpec {
            xi0: 0.025,
            b0: 1.5625e-5,
            alpha: 0.1,
            t0: 1.0258658877510116,
            m: 10.0 * PI,
            eta: 1.0,
            eps: 0.05,
            c1: 0.16547619047619058,
        }
    }

    #[test]
    fn barrier_boundary_values() {
        let spec = demo_spec();
        for t in [0.0, 1.0, 10.0, 40.0] {
            assert_eq!(barrier_value(&spec, 0.0, t), 0.0);
            let v1 = barrier_value(&spec, 1.0, t);
            let expect = spec.m / (2.0 * PI);
            assert!(
                ((v1 - expect) / expect).abs() < 1e-13,
                "t={t} boundary {v1} vs {expect}"
            );
        }
    }

    #[test]
    fn barrier_branches_agree_at_glue_point() {
        let spec = demo_spec();
        for t in [0.0, 0.5, 3.0, 20.0] {
            let (a, b) = (spec.a(t), spec.b(t));
            let inner = a * spec.xi0 / (b + spec.xi0);
            let outer = (a * b * spec.xi0 + a * spec.xi0 * spec.xi0) / (b + spec.xi0).powi(2);
            assert!(
                ((inner - outer) / inner).abs() < 1e-14,
                "t={t}: {inner} vs {outer}"
            );
            // The xi-derivative is also continuous: both branches give
            // a b/(b+xi0)^2.
            let d_in = a * b / (b + spec.xi0).powi(2);
            let d_out = barrier_d1(&spec, spec.xi0 + 1e-12, t);
            assert!(((d_in - d_out) / d_in).abs() < 1e-12);
        }
    }

    #[test]
    fn outer_drift_identity() {
        // Direct four-term sum vs the closed form -(b'/b) xi0^2 (1-xi)/(b+xi0^2).
        let spec = demo_spec();
        for &t in &[0.1, 1.0, 7.0, 30.0] {
            for &xi in &[0.03, 0.2, 0.5, 0.9, 0.999] {
                let direct = outer_drift_part(&spec, xi, t);
                let closed = outer_drift_part_closed(&spec, xi, t);
                let scale = direct.abs().max(closed.abs()).max(1e-300);
                assert!(
                    ((direct - closed) / scale).abs() < 1e-12,
                    "xi={xi} t={t}: {direct} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn outer_memory_integrand_closed_form() {
        // barrier(xi, s) - (m/2pi) xi = (m/2pi) xi0^2 (1-xi)/(b(s)+xi0^2) on
        // the outer branch.
        let spec = demo_spec();
        for &s in &[0.0, 0.7, 5.0] {
            for &xi in &[0.05, 0.4, 0.95] {
                let lhs = barrier_value(&spec, xi, s) - spec.m / (2.0 * PI) * xi;
                let rhs = spec.m / (2.0 * PI) * spec.xi0 * spec.xi0 * (1.0 - xi)
                    / (spec.b(s) + spec.xi0 * spec.xi0);
                assert!((lhs - rhs).abs() < 1e-13 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn inner_margin_arithmetic() {
        // (0.95)^3 * 10/1.05 - 8
        let v = inner_margin(0.05, 10.0 * PI, 1.0);
        let expect = 0.857375 * 10.0 / 1.05 - 8.0;
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        assert!(inner_margin(0.5, 4.0 * PI, 1.0) < 0.0);
    }

    #[test]
    fn inner_recipe_requires_supercritical_mass() {
        let p = ModelParams::new(1.0, 1.0, 8.0 * PI).unwrap();
        assert!(matches!(
            choose_inner_params(&p),
            Err(Error::SupercriticalityViolated { .. })
        ));
        let p = ModelParams::new(1.0, 1.0, 4.0 * PI).unwrap();
        assert!(choose_inner_params(&p).is_err());
    }

    #[test]
    fn inner_recipe_16pi() {
        // Arithmetic oracle: scanning eps shows c1 > 0 up to ~0.163, so the
        // halved choice lands near 0.08 and keeps a margin above 2.
        let p = ModelParams::new(1.0, 1.0, 16.0 * PI).unwrap();
        let inner = choose_inner_params(&p).unwrap();
        assert!(inner.eps > 0.05 && inner.eps < 0.12, "eps = {}", inner.eps);
        assert!(inner.c1 > 2.0, "c1 = {}", inner.c1);
        assert!((inner.xi0 - inner.eps / 2.0).abs() < 1e-15);
        assert!(inner.alpha_star > 0.0);
        // Both caps hold.
        assert!(inner.alpha_star <= inner.c1 / 4.0 + 1e-15);
        let rate_cap = (1.0 / (1.0 - inner.eps)).ln() / (1.0 / inner.eps).ln();
        assert!(inner.alpha_star <= rate_cap + 1e-15);
    }

    #[test]
    fn inner_recipe_delta_zero_limit_path() {
        let p = ModelParams::new(0.0, 1.0, PI).unwrap();
        let inner = choose_inner_params(&p).unwrap();
        assert!(inner.limit_case);
        assert_eq!(inner.eps, 0.25);
        assert!(inner.alpha_star.is_infinite());
    }

    #[test]
    fn outer_alpha_arithmetic() {
        // m = 10 pi, tau = 1, delta = 1, eta0 = 1, alpha_star = 1:
        // alpha0 = min{5/e, 2/e^2, 1} = 2/e^2; returned 0.9 * that.
        let p = ModelParams::new(1.0, 1.0, 10.0 * PI).unwrap();
        let v = choose_outer_alpha(&p, 1.0, 1.0).unwrap();
        let e = std::f64::consts::E;
        let expect = 0.9 * (2.0 / (e * e));
        assert!((v - expect).abs() < 1e-14, "{v} vs {expect}");
        // delta = 0 drops the exponentials.
        let p0 = ModelParams::new(0.0, 1.0, 10.0 * PI).unwrap();
        let v0 = choose_outer_alpha(&p0, 0.3, 9.0).unwrap();
        assert!((v0 - 0.9 * (10.0 / 2.0f64).min(0.6).min(9.0)).abs() < 1e-14);
        // eta0 -> 0 drives the choice to 0.
        let tiny = choose_outer_alpha(&p, 1e-12, 1.0).unwrap();
        assert!(tiny < 1e-11);
    }

    #[test]
    fn b0_t0_arithmetic() {
        let (b0, _) = choose_b0_t0(0.1, 0.05, 0.025).unwrap();
        assert!((b0 - 1.5625e-5).abs() < 1e-18);
        let (_, t0) = choose_b0_t0(0.1, 0.05, 0.025).unwrap();
        let expect = 20.0 * (1.0f64 / 0.95).ln();
        assert!((t0 - expect).abs() < 1e-14, "{t0} vs {expect}");
        // b0 < xi0^2 always (0.5 eps < 1).
        for eps in [0.01, 0.3, 0.9] {
            let (b0, _) = choose_b0_t0(1.0, eps, 0.2).unwrap();
            assert!(b0 < 0.04);
        }
    }

    #[test]
    fn w0_floor_arithmetic() {
        let p = ModelParams::new(1.0, 1.0, 10.0 * PI).unwrap();
        let (alpha, b0, xi0, t0) = (0.1, 1.5625e-5, 0.025, 1.0258658877510116);
        let v = w0_excess_floor(alpha, b0, xi0, t0, &p).unwrap();
        let expect = 0.5 * ((1.0 / xi0 + 1.0) * alpha + 8.0 / b0 * (alpha * t0).exp())
            * t0.exp();
        assert!(((v - expect) / expect).abs() < 1e-14);
        // ~7.9e5 at these values.
        assert!(v > 7.0e5 && v < 9.0e5, "v = {v}");
        // Increasing in t0; diverges as b0 -> 0.
        let v2 = w0_excess_floor(alpha, b0, xi0, 2.0 * t0, &p).unwrap();
        assert!(v2 > v);
        let v3 = w0_excess_floor(alpha, b0 / 100.0, xi0, t0, &p).unwrap();
        assert!(v3 > 50.0 * v);
    }

    #[test]
    fn growup_constants_identities() {
        let p = ModelParams::new(1.0, 1.0, 12.0 * PI).unwrap();
        let c = growup_constants(&p, 1.0).unwrap();
        let s = &c.spec;
        // radius = sqrt(xi0)
        assert!((c.radius * c.radius - s.xi0).abs() < 1e-15);
        // gamma_u algebraic inversion
        let inv = c.gamma_u * PI * s.b0 * (s.b0 + s.xi0 * s.xi0)
            / (p.m * (s.b0 + s.xi0).powi(2));
        assert!((inv - 1.0).abs() < 1e-12, "inv = {inv}");
        // tail average below the uniform level
        assert!(c.gamma_tail < p.m / PI);
        assert!(c.gamma_w == 2.0 * c.w0_floor);
        assert!(s.alpha < s.c1 / 4.0 && s.alpha > 0.0);
        assert!(s.b0 < s.xi0 * s.xi0);
    }

    #[test]
    fn growth_floor_of_barrier_slope() {
        // slope at origin a/b >= (m/4pi) e^{alpha t}/b0 once b < xi0^2.
        let p = ModelParams::new(1.0, 1.0, 12.0 * PI).unwrap();
        let c = growup_constants(&p, 1.0).unwrap();
        let s = &c.spec;
        for t in [0.0, 5.0, 50.0, 200.0] {
            let slope = s.a(t) / s.b(t);
            let floor = p.m / (4.0 * PI) * (s.alpha * t).exp() / s.b0;
            assert!(slope >= floor, "t={t}: slope {slope} < floor {floor}");
        }
    }

    #[test]
    fn envelope_offset_cases() {
        let m = 2.0 * PI;
        let xig = XiGrid::uniform(257).unwrap();
        // phi = (m/2pi) xi: nearly any b works, the fit lands near 1.
        let phi: Vec<f64> = xig.xi.iter().map(|x| m / (2.0 * PI) * x).collect();
        let b = fit_rational_envelope(&phi, &xig, m, 0.1).unwrap();
        assert!(b > 0.9, "b = {b}");
        // phi = min(c1 xi, m/2pi) with c1 = 2 (m/2pi): the returned b
        // verifies the bound at every node (self-certifying).
        let cap = m / (2.0 * PI);
        let phi2: Vec<f64> = xig.xi.iter().map(|x| (2.0 * cap * x).min(cap)).collect();
        let eps = 0.05;
        let b2 = fit_rational_envelope(&phi2, &xig, m, eps).unwrap();
        for (x, v) in xig.xi.iter().zip(&phi2).skip(1) {
            assert!(*v <= cap * (b2 + 1.0 + eps) * x / (b2 + x) * (1.0 + 1e-12));
        }
        // positive constant at 0 violates the precondition
        let bad: Vec<f64> = xig.xi.iter().map(|_| cap).collect();
        assert!(fit_rational_envelope(&bad, &xig, m, 0.1).is_err());
    }

    #[test]
    fn supersolution_eps_slack() {
        // m = 4 pi, delta = 1: eps = 0.5 and (m/(pi delta))(1+eps) = 6 < 8.
        let p = ModelParams::new(1.0, 1.0, 4.0 * PI).unwrap();
        let (eps, t0) = supersolution_eps_t0(&p, 0.0).unwrap();
        assert!((eps - 0.5).abs() < 1e-14);
        assert_eq!(t0, 0.0);
        // with a signal present the activation time is positive
        let (_, t0b) = supersolution_eps_t0(&p, 100.0).unwrap();
        assert!(t0b > 0.0);
        // supercritical mass is rejected
        let ps = ModelParams::new(1.0, 1.0, 10.0 * PI).unwrap();
        assert!(matches!(
            supersolution_eps_t0(&ps, 0.0),
            Err(Error::SubcriticalityViolated { .. })
        ));
    }

    #[test]
    fn supersolution_big_c_dominates_a() {
        let p = ModelParams::new(1.0, 1.0, 4.0 * PI).unwrap();
        let xig = XiGrid::uniform(129).unwrap();
        let cap = p.m / (2.0 * PI);
        let phi: Vec<f64> = xig.xi.iter().map(|x| (4.0 * cap * x).min(cap)).collect();
        let bound = supersolution_bound(&p, 0.0, &phi, &xig).unwrap();
        assert!(bound.big_c >= bound.a);
        assert!((bound.big_c - bound.a / bound.b).abs() < 1e-9 * bound.big_c);
    }

    #[test]
    fn ordering_report_trivial_cases() {
        let xi = vec![0.0, 0.5, 1.0];
        let mut a = ProfileSeries::new(xi.clone());
        a.push(0.0, vec![0.0, 1.0, 2.0]);
        let report = compare_trajectories(&a, &a, 1.0).unwrap();
        assert!(report.passed);
        assert!(report.max_violation <= 0.0);
        let mut b = ProfileSeries::new(xi);
        b.push(0.0, vec![0.0, 0.9, 2.0]);
        let report = compare_trajectories(&a, &b, 1.0).unwrap();
        assert!(!report.passed);
        assert!((report.max_violation - 0.1).abs() < 1e-15);
    }

    #[test]
    fn growup_data_report_margins() {
        let p = ModelParams::new(1.0, 1.0, 12.0 * PI).unwrap();
        let c = growup_constants(&p, 1.0).unwrap();
        let grid = std::sync::Arc::new(RadialGrid::graded(768, 1e-5).unwrap());
        let (u0, w0, report) = build_growup_data(&c, &p, &grid).unwrap();
        let mass = integrate_disk(&u0).unwrap();
        assert!(((mass - p.m) / p.m).abs() < 1e-10);
        // The literal inner-average condition holds out to ~sqrt(b0) and no
        // further (it is incompatible with the mass constraint beyond that).
        assert!(report.inner_avg_holds_until > 0.5 * c.spec.b0.sqrt());
        assert!(report.inner_avg_holds_until < c.radius);
        assert!(report.ordering_margin >= -1e-12 * p.m);
        assert!(report.u_tail_margin >= 0.0);
        assert!(report.w_inner_margin >= 0.0);
        assert!(report.w_tail_margin >= 0.0);
        // w0 is supported strictly inside the concentration radius.
        let r_support = w0
            .grid
            .r_centers
            .iter()
            .zip(&w0.values)
            .filter(|(_, v)| **v > 0.0)
            .map(|(r, _)| *r)
            .fold(0.0f64, f64::max);
        assert!(r_support < c.radius);
    }

    #[test]
    fn growup_data_needs_resolved_grid() {
        let p = ModelParams::new(1.0, 1.0, 12.0 * PI).unwrap();
        let c = growup_constants(&p, 1.0).unwrap();
        // A uniform grid cannot resolve the bump core near sqrt(b0).
        let grid = std::sync::Arc::new(RadialGrid::uniform(64).unwrap());
        match build_growup_data(&c, &p, &grid) {
            Err(Error::Construction(msg)) => {
                assert!(msg.contains("grid"), "message: {msg}")
            }
            other => panic!("expected a construction error, got {other:?}"),
        }
    }

    #[test]
    fn supersolution_certificate_nonnegative() {
        // Fitted supersolution for subcritical mass: residual >= 0 at all
        // sampled (xi, t > t0) with the run's actual signal.
        let p = ModelParams::new(1.0, 1.0, 4.0 * PI).unwrap();
        let xig = XiGrid::uniform(65).unwrap();
        let w0_xi: Vec<f64> = xig.xi.iter().map(|x| 0.3 * x.min(0.1)).collect();
        let kappa0 = *w0_xi.last().unwrap();
        let ctx =
            crate::transformed::OperatorContext::new(p, xig.clone(), w0_xi, kappa0).unwrap();
        let cap = p.m / (2.0 * PI);
        let phi: Vec<f64> = xig.xi.iter().map(|x| (6.0 * cap * x).min(cap)).collect();
        // ambient sup of w0 consistent with the moment bound used above
        let bound = supersolution_bound(&p, 0.6, &phi, &xig).unwrap();
        let report = certify_supersolution(&bound, &p, &ctx, 50.0, 60, 60);
        assert!(report.passed, "{}", report.summary());
    }

    #[test]
    fn inner_residual_continuous_at_delta_zero() {
        let mut spec = demo_spec();
        spec.m = PI;
        let p1 = ModelParams::new(1e-10, 1.0, PI).unwrap();
        let p0 = ModelParams::new(0.0, 1.0, PI).unwrap();
        let sig = SignalTerm::Zero;
        let (xi, t) = (0.01, 2.0);
        let r1 = barrier_residual_inner(&spec, &p1, &sig, xi, t);
        let r0 = barrier_residual_inner(&spec, &p0, &sig, xi, t);
        assert!(r0.is_finite() && r1.is_finite());
        assert!(((r1 - r0) / r0.abs().max(1e-300)).abs() < 1e-6, "{r1} vs {r0}");
    }
}
