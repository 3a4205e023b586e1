use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Model parameters of the indirect-signal chemotaxis system: decay rate
/// `delta` (>= 0), relaxation time `tau` (> 0) and total cell mass `m` (> 0).
///
/// The critical mass separating bounded from growing radial solutions is
/// `8*pi*delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub delta: f64,
    pub tau: f64,
    pub m: f64,
}

impl ModelParams {
    pub fn new(delta: f64, tau: f64, m: f64) -> Result<Self> {
        if !(delta.is_finite() && tau.is_finite() && m.is_finite()) {
            return Err(Error::invalid("model parameters must be finite"));
        }
        if delta < 0.0 {
            return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
        }
        if tau <= 0.0 {
            return Err(Error::invalid(format!("tau must be > 0, got {tau}")));
        }
        if m <= 0.0 {
            return Err(Error::invalid(format!("m must be > 0, got {m}")));
        }
        Ok(Self { delta, tau, m })
    }

    /// Critical mass `8*pi*delta`.
    pub fn critical_mass(&self) -> f64 {
        8.0 * PI * self.delta
    }

    /// Kernel decay rate `delta/tau`.
    pub fn lambda(&self) -> f64 {
        self.delta / self.tau
    }

    pub fn is_supercritical(&self) -> bool {
        self.m > self.critical_mass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_mass_is_8_pi_delta() {
        let p = ModelParams::new(1.0, 1.0, 4.0 * PI).unwrap();
        assert_eq!(p.critical_mass(), 8.0 * PI);
        let p = ModelParams::new(0.25, 2.0, 1.0).unwrap();
        assert_eq!(p.critical_mass(), 8.0 * PI * 0.25);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 1.0).is_err());
    }
}
