//! Points of the N = 2 orbit space and their Cartesian representatives.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RingError};
use crate::state::CortexState;

/// Default membership tolerance.
pub const ORBIT_TOL: f64 = 1e-9;

/// `(v₀, π₁, π₂, π₃)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    pub v0: f64,
    pub pi1: f64,
    pub pi2: f64,
    pub pi3: f64,
}

impl OrbitPoint {
    pub fn new(v0: f64, pi1: f64, pi2: f64, pi3: f64) -> Self {
        Self { v0, pi1, pi2, pi3 }
    }

    /// As [`OrbitPoint::new`], rejecting points outside the orbit space.
    pub fn checked(v0: f64, pi1: f64, pi2: f64, pi3: f64, tol: f64) -> Result<Self> {
        let p = Self::new(v0, pi1, pi2, pi3);
        if p.contains(tol) {
            Ok(p)
        } else {
            Err(RingError::InvalidParameter(format!(
                "({pi1}, {pi2}, {pi3}) is outside the orbit space"
            )))
        }
    }

    pub fn pi(&self) -> [f64; 3] {
        [self.pi1, self.pi2, self.pi3]
    }

    pub fn from_slice(u: &[f64]) -> Self {
        Self::new(u[0], u[1], u[2], u[3])
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.v0, self.pi1, self.pi2, self.pi3]
    }

    /// Orbit-space inequalities with slack `tol`.
    pub fn contains(&self, tol: f64) -> bool {
        self.pi1 >= -tol && self.pi2 >= -tol && self.pi3 * self.pi3 <= self.pi1 * self.pi1 * self.pi2.max(0.0) + tol
    }

    /// `π₁²π₂ - π₃²`; zero on boundary orbits (`Im z₂ = 0` in the gauge below).
    pub fn discriminant(&self) -> f64 {
        self.pi1 * self.pi1 * self.pi2 - self.pi3 * self.pi3
    }

    /// Gauge representative `z₁ = √π₁`, `z₂ = (π₃ + i√(π₁²π₂ - π₃²))/π₁`;
    /// `z₂ = √π₂` when `π₁ = 0`.
    pub fn representative(&self) -> CortexState {
        let pi1 = self.pi1.max(0.0);
        let pi2 = self.pi2.max(0.0);
        let z1 = Complex64::new(pi1.sqrt(), 0.0);
        let z2 = if pi1 > 0.0 {
            let y = self.discriminant().max(0.0).sqrt();
            Complex64::new(self.pi3 / pi1, y / pi1)
        } else {
            Complex64::new(pi2.sqrt(), 0.0)
        };
        CortexState::new(self.v0, vec![z1, z2])
    }

    pub fn from_state(s: &CortexState) -> Self {
        let [p1, p2, p3] = hilbert_pi(s.z[0], s.z[1]);
        Self::new(s.v0, p1, p2, p3)
    }
}

/// Hilbert basis `(|z₁|², |z₂|², Re(z₁² z̄₂))`.
pub fn hilbert_pi(z1: Complex64, z2: Complex64) -> [f64; 3] {
    [z1.norm_sqr(), z2.norm_sqr(), (z1 * z1 * z2.conj()).re]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_examples() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(hilbert_pi(one, one), [1.0, 1.0, 1.0]);
        assert_eq!(hilbert_pi(Complex64::i(), -one), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn representative_roundtrip() {
        let p = OrbitPoint::new(0.1, 0.4, 0.3, -0.15);
        let q = OrbitPoint::from_state(&p.representative());
        assert!((q.pi1 - p.pi1).abs() < 1e-14);
        assert!((q.pi2 - p.pi2).abs() < 1e-14);
        assert!((q.pi3 - p.pi3).abs() < 1e-14);
        let r = OrbitPoint::new(0.0, 0.0, 0.25, 0.0).representative();
        assert_eq!(r.z[1], Complex64::new(0.5, 0.0));
    }

    #[test]
    fn membership() {
        assert!(OrbitPoint::new(0.0, 1.0, 1.0, 1.0).contains(ORBIT_TOL));
        assert!(!OrbitPoint::new(0.0, 1.0, 1.0, 1.1).contains(ORBIT_TOL));
        assert!(!OrbitPoint::new(0.0, -0.1, 1.0, 0.0).contains(ORBIT_TOL));
        assert!(OrbitPoint::checked(0.0, 1.0, 0.0, 0.5, ORBIT_TOL).is_err());
    }
}
