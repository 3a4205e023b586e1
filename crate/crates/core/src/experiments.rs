//! Orchestrated studies: boundedness classification, exponential growth-rate
//! fitting, the energy-inequality monitor, and mass sweeps across the
//! critical level 8 pi delta.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::primal::{PrimalConfig, PrimalState};
use crate::radial::{integrate_disk, RadialGrid, RadialProfile, XiGrid};
use crate::trajectory::TrajectoryRecord;
use crate::transformed::run_transformed;
use crate::comparison::{context_from_data, initial_mass_function};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Growing,
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Bounded => write!(f, "Bounded"),
            Verdict::Growing => write!(f, "Growing"),
            Verdict::Undecided => write!(f, "Undecided"),
        }
    }
}

/// Classifier output with the windowed statistics it was based on.
#[derive(Debug, Clone)]
pub struct Classification {
    pub verdict: Verdict,
    pub growth_rate: Option<f64>,
    pub r2: Option<f64>,
    /// (relative sup-variation, normalized trend) over the last two windows.
    pub sup_variation: f64,
    pub sup_trend: f64,
}

/// Least-squares slope of log u over the trailing window of (t, u) samples.
pub fn growth_rate_fit(series: &[(f64, f64)], window: f64) -> Result<(f64, f64)> {
    if series.len() < 3 {
        return Err(Error::invalid("growth fit needs at least 3 samples"));
    }
    let t_end = series.last().unwrap().0;
    let tail: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= t_end - window)
        .cloned()
        .collect();
    if tail.len() < 3 {
        return Err(Error::invalid("growth window holds fewer than 3 samples"));
    }
    if tail.iter().any(|(_, u)| *u <= 0.0) {
        return Err(Error::invalid("growth fit needs positive samples"));
    }
    let n = tail.len() as f64;
    let (mut st, mut sy) = (0.0, 0.0);
    for (t, u) in &tail {
        st += t;
        sy += u.ln();
    }
    let (tbar, ybar) = (st / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (t, u) in &tail {
        let (dx, dy) = (t - tbar, u.ln() - ybar);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::invalid("growth fit needs distinct sample times"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, r2))
}

/// Classify a recorded trajectory: Growing when log u(0,t) rises over the
/// last window at slope > 0.01 with R^2 > 0.99; Bounded when sup u varies
/// by < 1% over the last two windows with no monotone trend; else Undecided.
pub fn boundedness_classifier(traj: &TrajectoryRecord, window: f64) -> Result<Classification> {
    let times = traj.times()?;
    if times.is_empty() {
        return Err(Error::invalid("empty trajectory"));
    }
    let span = times.last().unwrap() - times[0];
    if span < 3.0 * window {
        return Err(Error::invalid(format!(
            "trajectory spans {span}, needs at least 3 windows of {window}"
        )));
    }
    let sup_u = traj.column("sup_u")?;
    let u0 = traj.column("u_at_0")?;
    let t_end = *times.last().unwrap();

    // Growing: trailing-window regression of log u(0, t).
    let series: Vec<(f64, f64)> = times.iter().cloned().zip(u0.iter().cloned()).collect();
    let fit = if series.iter().filter(|(t, _)| *t >= t_end - window).all(|(_, u)| *u > 0.0) {
        growth_rate_fit(&series, window).ok()
    } else {
        None
    };

    // Bounded: variation and trend of sup u over the last two windows.
    let tail: Vec<(f64, f64)> = times
        .iter()
        .cloned()
        .zip(sup_u.iter().cloned())
        .filter(|(t, _)| *t >= t_end - 2.0 * window)
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, s) in &tail {
        lo = lo.min(*s);
        hi = hi.max(*s);
    }
    let sup_variation = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    // Normalized linear trend over the two windows.
    let n = tail.len() as f64;
    let tbar: f64 = tail.iter().map(|(t, _)| t).sum::<f64>() / n;
    let ybar: f64 = tail.iter().map(|(_, y)| y).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (t, y) in &tail {
        sxx += (t - tbar) * (t - tbar);
        sxy += (t - tbar) * (y - ybar);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let sup_trend = if ybar.abs() > 0.0 { (slope * 2.0 * window / ybar).abs() } else { 0.0 };

    let verdict = if let Some((rate, r2)) = fit {
        if rate > 0.01 && r2 > 0.99 {
            Verdict::Growing
        } else if sup_variation < 0.01 && sup_trend < 0.005 {
            Verdict::Bounded
        } else {
            Verdict::Undecided
        }
    } else if sup_variation < 0.01 && sup_trend < 0.005 {
        Verdict::Bounded
    } else {
        Verdict::Undecided
    };

    let (growth_rate, r2) = match (verdict, fit) {
        (Verdict::Growing, Some((rate, r2))) => (Some(rate), Some(r2)),
        (_, Some((rate, r2))) => (Some(rate), Some(r2)),
        _ => (None, None),
    };
    Ok(Classification { verdict, growth_rate, r2, sup_variation, sup_trend })
}

/// Disk integral of u^p.
fn power_integral(f: &RadialProfile, p: f64) -> f64 {
    f.values
        .iter()
        .zip(&f.grid.cell_areas)
        .map(|(v, a)| v.max(0.0).powf(p) * a)
        .sum()
}

/// Disk integral of |grad u^{p/2}|^2 by face differences.
fn gradient_integral(u: &RadialProfile, p: f64) -> f64 {
    let grid = &u.grid;
    let g: Vec<f64> = u.values.iter().map(|v| v.max(0.0).powf(0.5 * p)).collect();
    let mut acc = 0.0;
    for i in 1..grid.n {
        let dc = grid.r_centers[i] - grid.r_centers[i - 1];
        let slope = (g[i] - g[i - 1]) / dc;
        acc += 2.0 * PI * grid.r_faces[i] * slope * slope * dc;
    }
    acc
}

/// Both sides of the energy inequality for two consecutive states:
/// the backward difference of (1/p) int u^p + tau/(p+1) int w^{p+1}, plus
/// (4(p-1)/p^2) int |grad u^{p/2}|^2 + delta int w^{p+1} on the left,
/// against (p-1)/p int u^p w + int u w^p on the right.
pub fn energy_sides(
    prev: &PrimalState,
    cur: &PrimalState,
    p: &ModelParams,
    pexp: f64,
) -> Result<(f64, f64)> {
    if pexp <= 1.0 {
        return Err(Error::invalid("energy exponent must exceed 1"));
    }
    let dt = cur.t - prev.t;
    if dt <= 0.0 {
        return Err(Error::invalid("states must be strictly ordered in time"));
    }
    let functional = |s: &PrimalState| -> f64 {
        power_integral(&s.u, pexp) / pexp
            + p.tau / (pexp + 1.0) * power_integral(&s.w, pexp + 1.0)
    };
    let rate = (functional(cur) - functional(prev)) / dt;
    let grad = 4.0 * (pexp - 1.0) / (pexp * pexp) * gradient_integral(&cur.u, pexp);
    let absorb = p.delta * power_integral(&cur.w, pexp + 1.0);
    let lhs = rate + grad + absorb;

    let mixed1: f64 = cur
        .u
        .values
        .iter()
        .zip(cur.w.values.iter().zip(&cur.u.grid.cell_areas))
        .map(|(u, (w, a))| u.max(0.0).powf(pexp) * w * a)
        .sum();
    let mixed2: f64 = cur
        .u
        .values
        .iter()
        .zip(cur.w.values.iter().zip(&cur.u.grid.cell_areas))
        .map(|(u, (w, a))| u * w.max(0.0).powf(pexp) * a)
        .sum();
    let rhs = (pexp - 1.0) / pexp * mixed1 + mixed2;
    Ok((lhs, rhs))
}

/// Both sides plus the pass/fail of the inequality at the given tolerance.
pub fn energy_monitor(
    prev: &PrimalState,
    cur: &PrimalState,
    p: &ModelParams,
    pexp: f64,
    rel_tol: f64,
) -> Result<(f64, f64, bool)> {
    let (lhs, rhs) = energy_sides(prev, cur, p, pexp)?;
    Ok((lhs, rhs, lhs <= rhs + rel_tol * rhs.abs()))
}

/// Fraction of recorded steps (with a defined backward difference) at which
/// the energy inequality holds within the tolerance.
pub fn energy_holds_fraction(traj: &TrajectoryRecord, rel_tol: f64) -> Result<f64> {
    let lhs = traj.column("energy_lhs")?;
    let rhs = traj.column("energy_rhs")?;
    let mut total = 0usize;
    let mut holds = 0usize;
    for (l, r) in lhs.iter().zip(&rhs) {
        if !l.is_finite() || !r.is_finite() {
            continue;
        }
        total += 1;
        if *l <= *r + rel_tol * r.abs() {
            holds += 1;
        }
    }
    if total == 0 {
        return Err(Error::invalid("no recorded energy rows"));
    }
    Ok(holds as f64 / total as f64)
}

/// Initial-data family of a sweep row or a simulation command.
#[derive(Debug, Clone)]
pub enum DataFamily {
    /// u0 = m/pi, w0 = m/(pi delta) (or 0 when delta = 0): the homogeneous
    /// equilibrium.
    Homogeneous,
    /// Concentrated bumps: u0 carries the whole mass inside radius `r_u`,
    /// w0 is a bump of amplitude `w_amp` inside radius `r_w`.
    Concentrated { r_u: f64, r_w: f64, w_amp: f64 },
    /// Recipe-built concentrated data guaranteeing grow-up (supercritical
    /// mass only); the grid must resolve the recipe's pole scale.
    Growup { eta: f64 },
    /// Externally supplied profiles.
    Custom { u0: RadialProfile, w0: RadialProfile },
}

impl DataFamily {
    pub fn default_concentrated() -> Self {
        DataFamily::Concentrated { r_u: 0.05, r_w: 0.15, w_amp: 0.0 }
    }

    /// Realize the family as radial profiles with u0 mass exactly m.
    pub fn build(
        &self,
        p: &ModelParams,
        grid: &Arc<RadialGrid>,
    ) -> Result<(RadialProfile, RadialProfile)> {
        match self {
            DataFamily::Homogeneous => {
                let u0 = RadialProfile::constant(grid.clone(), p.m / PI)?;
                let w_level = if p.delta > 0.0 { p.m / (PI * p.delta) } else { 0.0 };
                let w0 = RadialProfile::constant(grid.clone(), w_level)?;
                Ok((u0, w0))
            }
            DataFamily::Concentrated { r_u, r_w, w_amp } => {
                let flat = 0.8;
                let shape = |r: f64, rad: f64| -> f64 {
                    if r <= flat * rad {
                        1.0
                    } else if r >= rad {
                        0.0
                    } else {
                        let s = (r - flat * rad) / ((1.0 - flat) * rad);
                        (0.5 * PI * s).cos().powi(2)
                    }
                };
                let u_shape = RadialProfile::from_fn(grid.clone(), |r| shape(r, *r_u))?;
                let total = integrate_disk(&u_shape)?;
                if total <= 0.0 {
                    return Err(Error::Construction("u0 bump unresolved on the grid".into()));
                }
                let scale = p.m / total;
                let u0 = RadialProfile::new(
                    grid.clone(),
                    u_shape.values.iter().map(|v| v * scale).collect(),
                )?;
                let w_level = if *w_amp > 0.0 {
                    *w_amp
                } else if p.delta > 0.0 {
                    // Default: carry the equilibrium signal mass concentrated
                    // in the w-bump.
                    p.m / (PI * p.delta)
                } else {
                    p.m / PI
                };
                let w0 = RadialProfile::from_fn(grid.clone(), |r| w_level * shape(r, *r_w))?;
                Ok((u0, w0))
            }
            DataFamily::Growup { eta } => {
                let consts = crate::comparison::growup_constants(p, *eta)?;
                let (u0, w0, _) = crate::comparison::build_growup_data(&consts, p, grid)?;
                Ok((u0, w0))
            }
            DataFamily::Custom { u0, w0 } => Ok((u0.clone(), w0.clone())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub masses: Vec<f64>,
    pub delta: f64,
    pub tau: f64,
    pub family: DataFamily,
    pub horizon: f64,
    pub dt: f64,
    pub record_every: f64,
    pub window: f64,
    pub n_r: usize,
    pub nxi: usize,
    /// Graded xi grid floor; None keeps the uniform grid.
    pub xi_min: Option<f64>,
    /// Graded radial grid floor for data construction; None keeps uniform.
    pub r_min: Option<f64>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.masses.is_empty() {
            return Err(Error::invalid("sweep needs at least one mass"));
        }
        if self.masses.iter().any(|m| *m <= 0.0) {
            return Err(Error::invalid("masses must be positive"));
        }
        if self.masses.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("masses must be sorted ascending"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub m: f64,
    pub m_over_critical: f64,
    pub verdict: Option<Verdict>,
    pub alpha_hat: f64,
    pub r2: f64,
    pub sup_u_final: f64,
    pub runtime_s: f64,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn csv_header() -> &'static str {
        "m,m_over_critical,verdict,alpha_hat,r2,sup_u_final,runtime_s"
    }

    pub fn to_csv_line(&self) -> String {
        use crate::radial::fmt_g17;
        format!(
            "{},{},{},{},{},{},{:.3}",
            fmt_g17(self.m),
            if self.m_over_critical.is_finite() {
                fmt_g17(self.m_over_critical)
            } else {
                "inf".to_string()
            },
            match (&self.verdict, &self.error) {
                (Some(v), _) => v.to_string(),
                (None, Some(_)) => "Error".to_string(),
                _ => "Undecided".to_string(),
            },
            fmt_g17(self.alpha_hat),
            fmt_g17(self.r2),
            fmt_g17(self.sup_u_final),
            self.runtime_s
        )
    }
}

fn sweep_row(cfg: &SweepConfig, m: f64) -> SweepRow {
    let start = Instant::now();
    let critical = 8.0 * PI * cfg.delta;
    let m_over_critical = if critical > 0.0 { m / critical } else { f64::INFINITY };
    let run = || -> Result<(Classification, f64)> {
        let p = ModelParams::new(cfg.delta, cfg.tau, m)?;
        let grid = Arc::new(match cfg.r_min {
            Some(rm) => RadialGrid::graded(cfg.n_r, rm)?,
            None => RadialGrid::uniform(cfg.n_r)?,
        });
        // "Concentrated" rows use the recipe-built data wherever the recipe
        // is defined (supercritical mass); the plain bump below threshold.
        let family = match &cfg.family {
            DataFamily::Concentrated { .. } if p.is_supercritical() => {
                DataFamily::Growup { eta: 1.0 }
            }
            other => other.clone(),
        };
        let (u0, w0) = family.build(&p, &grid)?;
        let xig = match cfg.xi_min {
            Some(x) => XiGrid::graded(cfg.nxi, x)?,
            None => XiGrid::uniform(cfg.nxi)?,
        };
        let ctx = context_from_data(&p, &w0, &xig)?;
        let u0_xi = initial_mass_function(&u0, &p, &xig)?;
        // Sweeps classify rather than abort: recipe-built grow-up data
        // legitimately exceeds the primal-run abort level within the first
        // record interval, so the flag level sits near the top of f64 range.
        let run_cfg = PrimalConfig::new(cfg.dt, cfg.horizon, cfg.record_every, 1e250)?;
        let out = run_transformed(u0_xi, &ctx, &run_cfg)?;
        let sup_final = *out.trajectory.column("sup_u")?.last().unwrap();
        if out.trajectory.blowup_flagged {
            // The run crossed the abort level before the horizon: fit the
            // rate on the trailing half of whatever was recorded.
            let times = out.trajectory.times()?;
            let span = times.last().unwrap() - times[0];
            let series: Vec<(f64, f64)> = times
                .iter()
                .cloned()
                .zip(out.trajectory.column("u_at_0")?)
                .collect();
            let (rate, r2) = growth_rate_fit(&series, 0.5 * span)?;
            return Ok((
                Classification {
                    verdict: Verdict::Growing,
                    growth_rate: Some(rate),
                    r2: Some(r2),
                    sup_variation: f64::NAN,
                    sup_trend: f64::NAN,
                },
                sup_final,
            ));
        }
        let class = boundedness_classifier(&out.trajectory, cfg.window)?;
        Ok((class, sup_final))
    };
    match run() {
        Ok((class, sup_final)) => SweepRow {
            m,
            m_over_critical,
            verdict: Some(class.verdict),
            alpha_hat: class.growth_rate.unwrap_or(f64::NAN),
            r2: class.r2.unwrap_or(f64::NAN),
            sup_u_final: sup_final,
            runtime_s: start.elapsed().as_secs_f64(),
            error: None,
        },
        Err(e) => SweepRow {
            m,
            m_over_critical,
            verdict: None,
            alpha_hat: f64::NAN,
            r2: f64::NAN,
            sup_u_final: f64::NAN,
            runtime_s: start.elapsed().as_secs_f64(),
            error: Some(e.to_string()),
        },
    }
}

/// Run one transformed-solver classification per mass, in parallel, merged
/// in mass order. Row errors are reported in the row, not propagated.
pub fn mass_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows: Vec<SweepRow> =
        cfg.masses.par_iter().map(|&m| sweep_row(cfg, m)).collect();
    rows.sort_by(|a, b| a.m.partial_cmp(&b.m).unwrap());
    Ok(rows)
}

/// Resolution warnings: a Bounded verdict above a Growing mass breaks the
/// expected monotone dichotomy.
pub fn sweep_warnings(rows: &[SweepRow]) -> Vec<String> {
    let mut warnings = Vec::new();
    let mut growing_at: Option<f64> = None;
    for row in rows {
        match row.verdict {
            Some(Verdict::Growing) => {
                if growing_at.is_none() {
                    growing_at = Some(row.m);
                }
            }
            Some(Verdict::Bounded) => {
                if let Some(mg) = growing_at {
                    warnings.push(format!(
                        "non-monotone verdicts: Bounded at m = {} above Growing at m = {mg}",
                        row.m
                    ));
                }
            }
            _ => {}
        }
    }
    warnings
}
