//! Radial grids on the unit disk, profiles sampled at cell centers, annulus
//! quadrature, the mass-function transformation and the closed-form mass/mean
//! identities shared by both solvers.
//!
//! All disk integrals use the annulus midpoint rule
//! `int_disk f = sum_i f(c_i) * pi (r_{i+1}^2 - r_i^2)`,
//! which is exact for piecewise-constant profiles and conserves mass exactly
//! under the finite-volume updates built on the same cells.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Format a float with 17 significant digits (round-trips f64 in CSV output).
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Annulus partition of the unit disk: `n` cells with faces
/// `0 = r_0 < r_1 < ... < r_n = 1`, profiles sampled at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub n: usize,
    pub r_faces: Vec<f64>,
    pub r_centers: Vec<f64>,
    pub cell_areas: Vec<f64>,
}

impl RadialGrid {
    /// Uniform partition with cell width `1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("radial grid needs at least 2 cells"));
        }
        let faces: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        Self::from_faces(faces)
    }

    /// Partition graded toward the origin: the innermost face sits at
    /// `r_min` and face radii grow geometrically up to 1. Used when the
    /// data or the dynamics concentrate mass at scales far below `1/n`.
    pub fn graded(n: usize, r_min: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::invalid("graded radial grid needs at least 4 cells"));
        }
        if !(r_min > 0.0 && r_min < 0.5) {
            return Err(Error::invalid(format!("r_min must be in (0, 0.5), got {r_min}")));
        }
        let ratio = (1.0 / r_min).powf(1.0 / (n - 1) as f64);
        let mut faces = Vec::with_capacity(n + 1);
        faces.push(0.0);
        for i in 0..n {
            faces.push(r_min * ratio.powi(i as i32));
        }
        let last = faces.len() - 1;
        faces[last] = 1.0;
        Self::from_faces(faces)
    }

    pub fn from_faces(r_faces: Vec<f64>) -> Result<Self> {
        let n = r_faces.len().saturating_sub(1);
        if n < 2 {
            return Err(Error::invalid("radial grid needs at least 2 cells"));
        }
        if r_faces[0] != 0.0 || r_faces[n] != 1.0 {
            return Err(Error::invalid("face radii must start at 0 and end at 1"));
        }
        if r_faces.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("face radii must be strictly increasing"));
        }
        let r_centers: Vec<f64> = r_faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let cell_areas: Vec<f64> = r_faces
            .windows(2)
            .map(|w| PI * (w[1] * w[1] - w[0] * w[0]))
            .collect();
        Ok(Self { n, r_faces, r_centers, cell_areas })
    }
}

/// Scalar radial field sampled at the cell centers of a shared grid.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::invalid(format!(
                "profile has {} samples but the grid has {} cells",
                values.len(),
                grid.n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("profile values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.r_centers.iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<RadialGrid>, c: f64) -> Result<Self> {
        let n = grid.n;
        Self::new(grid, vec![c; n])
    }

    /// Point evaluation by linear interpolation between cell centers,
    /// constant beyond the first/last center.
    pub fn eval(&self, r: f64) -> f64 {
        let c = &self.grid.r_centers;
        let v = &self.values;
        if r <= c[0] {
            return v[0];
        }
        if r >= c[c.len() - 1] {
            return v[v.len() - 1];
        }
        let j = match c.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(j) => return v[j],
            Err(j) => j,
        };
        let w = (r - c[j - 1]) / (c[j] - c[j - 1]);
        v[j - 1] + w * (v[j] - v[j - 1])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Serialize as CSV with the given coordinate header ("r" or "xi").
    pub fn to_csv(&self, coord_name: &str) -> String {
        let mut out = format!("{coord_name},value\n");
        for (r, v) in self.grid.r_centers.iter().zip(&self.values) {
            out.push_str(&fmt_g17(*r));
            out.push(',');
            out.push_str(&fmt_g17(*v));
            out.push('\n');
        }
        out
    }
}

/// Disk integral `int_Omega f = 2 pi int_0^1 r f(r) dr` by the annulus
/// midpoint rule. Exact for piecewise-constant profiles.
pub fn integrate_disk(f: &RadialProfile) -> Result<f64> {
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("integrate_disk: non-finite profile values"));
    }
    Ok(f.values
        .iter()
        .zip(&f.grid.cell_areas)
        .map(|(v, a)| v * a)
        .sum())
}

/// Node set for the mass-function coordinate `xi = r^2` on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct XiGrid {
    pub xi: Vec<f64>,
}

impl XiGrid {
    pub fn uniform(nxi: usize) -> Result<Self> {
        if nxi < 3 {
            return Err(Error::invalid("xi grid needs at least 3 nodes"));
        }
        let mut xi: Vec<f64> = (0..nxi).map(|i| i as f64 / (nxi - 1) as f64).collect();
        xi[nxi - 1] = 1.0;
        Self::new(xi)
    }

    /// Grid graded toward the origin: first interior node at `xi_min`,
    /// nodes growing geometrically up to 1. Resolves near-origin mass
    /// concentration whose scale collapses exponentially in time.
    pub fn graded(nxi: usize, xi_min: f64) -> Result<Self> {
        if nxi < 4 {
            return Err(Error::invalid("graded xi grid needs at least 4 nodes"));
        }
        if !(xi_min > 1e-200 && xi_min < 0.25) {
            return Err(Error::invalid(format!("xi_min must be in (1e-200, 0.25), got {xi_min}")));
        }
        let ratio = (1.0 / xi_min).powf(1.0 / (nxi - 2) as f64);
        let mut xi = Vec::with_capacity(nxi);
        xi.push(0.0);
        for i in 0..(nxi - 1) {
            xi.push(xi_min * ratio.powi(i as i32));
        }
        let last = xi.len() - 1;
        xi[last] = 1.0;
        Self::new(xi)
    }

    pub fn new(xi: Vec<f64>) -> Result<Self> {
        if xi.len() < 3 {
            return Err(Error::invalid("xi grid needs at least 3 nodes"));
        }
        if xi[0] != 0.0 || *xi.last().unwrap() != 1.0 {
            return Err(Error::invalid("xi nodes must start at 0 and end at 1"));
        }
        if xi.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("xi nodes must be strictly increasing"));
        }
        Ok(Self { xi })
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

/// Cumulative mass function `U(xi) = int_0^{sqrt(xi)} r u(r) dr` at each node.
///
/// Piecewise-constant u makes U piecewise-linear in xi between face values
/// `r_i^2`, so the evaluation is exact: U(0) = 0, U(1) = integrate_disk(u)/(2 pi),
/// and U is nondecreasing whenever u >= 0.
pub fn mass_function(u: &RadialProfile, xig: &XiGrid) -> Result<Vec<f64>> {
    if u.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("mass_function: u must be finite and nonnegative"));
    }
    Ok(cumulative_on_xi(u, xig))
}

/// Same cumulative evaluation without the sign requirement (shared by
/// `mass_function` and the initial-signal moments).
fn cumulative_on_xi(u: &RadialProfile, xig: &XiGrid) -> Vec<f64> {
    let grid = &u.grid;
    let n = grid.n;
    // Face values of xi and the cumulative integral at faces.
    let fx: Vec<f64> = grid.r_faces.iter().map(|r| r * r).collect();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for i in 0..n {
        cum.push(cum[i] + 0.5 * u.values[i] * (fx[i + 1] - fx[i]));
    }
    let mut out = Vec::with_capacity(xig.len());
    let mut cell = 0usize;
    for &x in &xig.xi {
        while cell + 1 < n && fx[cell + 1] < x {
            cell += 1;
        }
        out.push(cum[cell] + 0.5 * u.values[cell] * (x - fx[cell]));
    }
    // Pin the endpoints exactly.
    out[0] = 0.0;
    let last = out.len() - 1;
    out[last] = cum[n];
    out
}

/// Initial-signal moments: `W0(xi) = int_0^{sqrt(xi)} r w0(r) dr` on the grid
/// and its boundary value `kappa0 = W0(1)`.
pub fn w0_moments(w0: &RadialProfile, xig: &XiGrid) -> Result<(Vec<f64>, f64)> {
    if w0.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("w0_moments: w0 must be finite and nonnegative"));
    }
    let w = cumulative_on_xi(w0, xig);
    let kappa0 = *w.last().unwrap();
    Ok((w, kappa0))
}

/// Closed form of the disk mean of w,
/// `mu(t) = (1/pi) e^{-delta t/tau} int w0 + (m/(pi tau)) int_0^t e^{-delta(t-s)/tau} ds`,
/// with the kernel integral evaluated per the delta > 0 / delta = 0 branches.
pub fn signal_mean_closed_form(p: &ModelParams, w0_mass: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::invalid(format!("time must be >= 0, got {t}")));
    }
    if !(w0_mass.is_finite() && w0_mass >= 0.0) {
        return Err(Error::invalid("w0_mass must be finite and nonnegative"));
    }
    let lam = p.lambda();
    let kernel_integral = if p.delta > 0.0 {
        -(p.tau / p.delta) * (-lam * t).exp_m1()
    } else {
        t
    };
    Ok((-lam * t).exp() * w0_mass / PI + p.m / (PI * p.tau) * kernel_integral)
}

/// Closed form of the total signal mass `int_Omega w(t)`:
/// `e^{-delta t/tau} int w0 + (m/delta)(1 - e^{-delta t/tau})` for delta > 0,
/// `int w0 + (m/tau) t` for delta = 0.
pub fn w_mass_closed_form(p: &ModelParams, w0_mass: f64, t: f64) -> Result<f64> {
    Ok(PI * signal_mean_closed_form(p, w0_mass, t)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::uniform(n).unwrap())
    }

    #[test]
    fn cell_areas_sum_to_pi() {
        for g in [grid(8), grid(512), Arc::new(RadialGrid::graded(64, 1e-5).unwrap())] {
            let total: f64 = g.cell_areas.iter().sum();
            assert!((total - PI).abs() < 1e-12 * PI, "sum {total}");
        }
    }

    #[test]
    fn disk_integral_of_one_is_pi() {
        let f = RadialProfile::constant(grid(64), 1.0).unwrap();
        assert!((integrate_disk(&f).unwrap() - PI).abs() < 1e-13);
        let f2 = RadialProfile::constant(grid(64), 2.0).unwrap();
        assert!((integrate_disk(&f2).unwrap() - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn disk_integral_smooth_profile() {
        // f(r) = 4(1 - r^2): int = 2 pi * 4 * (1/2 - 1/4) = 2 pi.
        let f = RadialProfile::from_fn(grid(512), |r| 4.0 * (1.0 - r * r)).unwrap();
        let v = integrate_disk(&f).unwrap();
        assert!((v - 2.0 * PI).abs() < 5e-5, "got {v}");
    }

    #[test]
    fn quadrature_refinement_is_second_order() {
        // Halving the cell width must shrink the error by >= 3.5.
        let exact = 2.0 * PI;
        let err = |n: usize| {
            let f = RadialProfile::from_fn(grid(n), |r| 4.0 * (1.0 - r * r)).unwrap();
            (integrate_disk(&f).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 / e2 >= 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn rejects_non_finite() {
        let mut f = RadialProfile::constant(grid(8), 1.0).unwrap();
        f.values[3] = f64::NAN;
        assert!(integrate_disk(&f).is_err());
    }

    #[test]
    fn mass_function_uniform_profile() {
        // u = m/pi uniform: U(xi) = m xi / (2 pi).
        let m = 4.0 * PI;
        let u = RadialProfile::constant(grid(128), m / PI).unwrap();
        let xig = XiGrid::uniform(65).unwrap();
        let us = mass_function(&u, &xig).unwrap();
        for (x, v) in xig.xi.iter().zip(&us) {
            assert!((v - m * x / (2.0 * PI)).abs() < 1e-12, "xi={x} v={v}");
        }
        assert_eq!(us[0], 0.0);
    }

    #[test]
    fn mass_function_boundary_matches_disk_integral() {
        let u = RadialProfile::from_fn(grid(256), |r| 1.0 + (3.0 * r).cos().powi(2)).unwrap();
        let xig = XiGrid::uniform(33).unwrap();
        let us = mass_function(&u, &xig).unwrap();
        let total = integrate_disk(&u).unwrap();
        let last = us.last().unwrap();
        assert!(
            (2.0 * PI * last - total).abs() <= 1e-10 * total.abs(),
            "2 pi U(1) = {}, integral = {total}",
            2.0 * PI * last
        );
    }

    #[test]
    fn mass_function_concentrated_profile() {
        // All mass inside r < 0.1: U(xi) = m/(2 pi) for xi >= 0.01.
        // Oracle: direct quadrature of the piecewise-constant profile.
        let m = 2.0 * PI;
        let g = grid(1000); // faces align with r = 0.1
        let amp = m / (PI * 0.01);
        let u = RadialProfile::from_fn(g, |r| if r < 0.1 { amp } else { 0.0 }).unwrap();
        let xig = XiGrid::uniform(101).unwrap();
        let us = mass_function(&u, &xig).unwrap();
        for (x, v) in xig.xi.iter().zip(&us) {
            if *x >= 0.01 {
                assert!((v - m / (2.0 * PI)).abs() < 1e-12, "xi={x} v={v}");
            }
        }
    }

    #[test]
    fn mass_function_is_nondecreasing() {
        let u = RadialProfile::from_fn(grid(97), |r| (5.0 * r).sin().powi(2) + 0.1).unwrap();
        let xig = XiGrid::uniform(211).unwrap();
        let us = mass_function(&u, &xig).unwrap();
        assert!(us.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn mass_function_rejects_negative() {
        let u = RadialProfile::from_fn(grid(16), |r| r - 0.5).unwrap();
        assert!(mass_function(&u, &XiGrid::uniform(8).unwrap()).is_err());
    }

    #[test]
    fn w0_moments_cases() {
        let xig = XiGrid::uniform(101).unwrap();

        let z = RadialProfile::constant(grid(64), 0.0).unwrap();
        let (w, k) = w0_moments(&z, &xig).unwrap();
        assert!(w.iter().all(|v| *v == 0.0));
        assert_eq!(k, 0.0);

        // w0 = c uniform: W0(xi) = c xi / 2, kappa0 = c/2.
        let c = 3.0;
        let u = RadialProfile::constant(grid(64), c).unwrap();
        let (w, k) = w0_moments(&u, &xig).unwrap();
        for (x, v) in xig.xi.iter().zip(&w) {
            assert!((v - c * x / 2.0).abs() < 1e-13);
        }
        assert!((k - c / 2.0).abs() < 1e-13);

        // Indicator on r < 1/2: W0(xi) = min(xi, 1/4)/2, kappa0 = 1/8.
        // Oracle: piecewise antiderivative, checked against the quadrature rule.
        let ind = RadialProfile::from_fn(grid(128), |r| if r < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let (w, k) = w0_moments(&ind, &xig).unwrap();
        for (x, v) in xig.xi.iter().zip(&w) {
            assert!((v - 0.5 * x.min(0.25)).abs() < 1e-13, "xi={x} v={v}");
        }
        assert!((k - 0.125).abs() < 1e-13);
    }

    #[test]
    fn signal_mean_cases() {
        // delta=1, tau=1, w0_mass=0: mu(t) = (m/pi)(1 - e^{-t}).
        let p = ModelParams::new(1.0, 1.0, 5.0).unwrap();
        for t in [0.0, 0.3, 2.0, 10.0] {
            let v = signal_mean_closed_form(&p, 0.0, t).unwrap();
            assert!((v - p.m / PI * (1.0 - (-t).exp())).abs() < 1e-14);
        }
        // delta=0: mu(t) = m t / pi.
        let p0 = ModelParams::new(0.0, 1.0, 2.0).unwrap();
        let v = signal_mean_closed_form(&p0, 0.0, 3.0).unwrap();
        assert!((v - p0.m * 3.0 / PI).abs() < 1e-14);
        // t=0: mu(0) = w0_mass/pi.
        let v = signal_mean_closed_form(&p, 1.7, 0.0).unwrap();
        assert!((v - 1.7 / PI).abs() < 1e-15);
        assert!(signal_mean_closed_form(&p, 1.0, -0.1).is_err());
    }

    #[test]
    fn signal_mean_long_time_limit() {
        // delta > 0: mu -> m/(pi delta); checked at t = 50 tau/delta.
        let p = ModelParams::new(0.7, 1.3, 4.0).unwrap();
        let t = 50.0 * p.tau / p.delta;
        let v = signal_mean_closed_form(&p, 9.0, t).unwrap();
        let limit = p.m / (PI * p.delta);
        assert!(((v - limit) / limit).abs() < 1e-6, "v={v} limit={limit}");
    }

    #[test]
    fn profile_interpolation_and_csv() {
        let g = grid(4);
        let u = RadialProfile::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(u.eval(0.0), 1.0);
        assert_eq!(u.eval(1.0), 4.0);
        let mid = u.eval(0.25); // halfway between centers 0.125 and 0.375
        assert!((mid - 1.5).abs() < 1e-15);
        let csv = u.to_csv("r");
        assert!(csv.starts_with("r,value\n"));
        assert_eq!(csv.lines().count(), 5);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn graded_xi_grid_shape() {
        let g = XiGrid::graded(300, 1e-8).unwrap();
        assert_eq!(g.xi[0], 0.0);
        assert_eq!(*g.xi.last().unwrap(), 1.0);
        assert!((g.xi[1] - 1e-8).abs() < 1e-20);
        assert!(g.xi.windows(2).all(|w| w[1] > w[0]));
    }
}
