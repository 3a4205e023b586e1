//! Numerical laboratory for a two-dimensional chemotaxis system with
//! indirect signal production on the unit disk:
//!
//! * `radial`: grids, profiles, annulus quadrature, the mass-function
//!   transformation and closed-form mass/mean identities;
//! * `primal`: finite-volume IMEX integration of the radially symmetric
//!   parabolic-elliptic-ODE system;
//! * `transformed`: direct integration of the scalar nonlocal equation for
//!   the mass function, with the exponential memory reduced to a local field;
//! * `comparison`: explicit sub/supersolution families, parameter recipes,
//!   pointwise sign certificates and empirical ordering checks;
//! * `experiments`: boundedness classification, growth-rate fits, the
//!   energy-inequality monitor and critical-mass sweeps.
//!
//! Radial solutions stay uniformly bounded when the initial mass lies below
//! 8 pi delta and can be driven into exponential infinite-time growth above
//! it; the modules here reproduce both regimes numerically.

pub mod comparison;
pub mod error;
pub mod experiments;
pub mod params;
pub mod primal;
pub mod quad;
pub mod radial;
pub mod trajectory;
pub mod transformed;

pub use error::{Error, Result};
pub use params::ModelParams;
pub use radial::{
    integrate_disk, mass_function, signal_mean_closed_form, w0_moments, w_mass_closed_form,
    RadialGrid, RadialProfile, XiGrid,
};
