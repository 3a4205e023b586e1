//! Property tests for the structural invariants: mass-function monotonicity
//! and boundary consistency under arbitrary nonnegative profiles, and the
//! two-branch continuity of the comparison family under arbitrary admissible
//! parameters.

use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use chemomass::comparison::{barrier_d1, barrier_value, SubsolutionSpec};
use chemomass::radial::{integrate_disk, mass_function, RadialGrid, RadialProfile, XiGrid};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mass_function_monotone_and_boundary_consistent(
        values in prop::collection::vec(0.0f64..50.0, 32),
        nxi in 8usize..100,
    ) {
        let grid = Arc::new(RadialGrid::uniform(values.len()).unwrap());
        let u = RadialProfile::new(grid, values).unwrap();
        let xig = XiGrid::uniform(nxi.max(3)).unwrap();
        let us = mass_function(&u, &xig).unwrap();
        prop_assert_eq!(us[0], 0.0);
        prop_assert!(us.windows(2).all(|w| w[1] >= w[0]));
        let total = integrate_disk(&u).unwrap();
        let last = *us.last().unwrap();
        prop_assert!(
            (2.0 * PI * last - total).abs() <= 1e-10 * total.abs().max(1e-12),
            "2 pi U(1) = {} vs integral {}", 2.0 * PI * last, total
        );
    }

    #[test]
    fn barrier_branches_join_continuously(
        xi0 in 0.01f64..0.5,
        b_frac in 0.01f64..0.99,
        alpha in 1e-3f64..1.0,
        m_mult in 0.5f64..20.0,
        t in 0.0f64..50.0,
    ) {
        let spec = SubsolutionSpec {
            xi0,
            b0: b_frac * xi0 * xi0,
            alpha,
            t0: 1.0,
            m: m_mult * PI,
            eta: 1.0,
            eps: 0.1,
            c1: 1.0,
        };
        spec.validate().unwrap();
        // Value continuity at the glue point to 1e-14 relative.
        let eps_xi = xi0 * 1e-9;
        let left = barrier_value(&spec, xi0 - eps_xi, t);
        let right = barrier_value(&spec, xi0 + eps_xi, t);
        let scale = left.abs().max(right.abs()).max(1e-300);
        prop_assert!((left - right).abs() / scale < 1e-7, "{left} vs {right}");
        let at = barrier_value(&spec, xi0, t);
        let exact_gap = (at - right).abs() / scale;
        prop_assert!(exact_gap < 1e-7);
        // Derivative continuity: both branches give a b/(b+xi0)^2.
        let dl = barrier_d1(&spec, xi0 * (1.0 - 1e-12), t);
        let dr = barrier_d1(&spec, xi0 * (1.0 + 1e-12), t);
        prop_assert!((dl - dr).abs() / dl.abs().max(1e-300) < 1e-9, "{dl} vs {dr}");
        // The slope at the origin dominates the exponential envelope once
        // b(t) < xi0^2.
        let slope = spec.a(t) / spec.b(t);
        let floor = spec.m / (4.0 * PI) * (alpha * t).exp() / spec.b0;
        prop_assert!(slope >= floor * (1.0 - 1e-12));
    }
}
