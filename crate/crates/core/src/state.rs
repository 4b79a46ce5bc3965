//! Galerkin coordinates `(v₀, z₁, …, z_N)` and the O(2) action on them.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::ModelSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CortexState {
    pub v0: f64,
    pub z: Vec<Complex64>,
}

impl CortexState {
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            v0: 0.0,
            z: vec![Complex64::new(0.0, 0.0); n_modes],
        }
    }

    pub fn new(v0: f64, z: Vec<Complex64>) -> Self {
        Self { v0, z }
    }

    pub fn n_modes(&self) -> usize {
        self.z.len()
    }

    /// Real coordinates `(v₀, Re z₁, Im z₁, …)`, dimension `2N + 1`.
    pub fn to_real(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 + 2 * self.z.len());
        out.push(self.v0);
        for z in &self.z {
            out.push(z.re);
            out.push(z.im);
        }
        out
    }

    /// Inverse of [`CortexState::to_real`].
    pub fn from_real(u: &[f64]) -> Self {
        assert!(u.len() % 2 == 1, "real coordinates have odd length");
        let z = u[1..].chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        Self { v0: u[0], z }
    }

    /// Coordinates in the reflection-invariant subspace `(v₀, Re z₁, …)`.
    pub fn to_reflection_chart(&self) -> Vec<f64> {
        std::iter::once(self.v0).chain(self.z.iter().map(|z| z.re)).collect()
    }

    pub fn from_reflection_chart(u: &[f64]) -> Self {
        Self {
            v0: u[0],
            z: u[1..].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    /// Applies the rotation `z_p ↦ e^{2ipγ} z_p`, then conjugation if `reflect`.
    pub fn group_act(&self, gamma: f64, reflect: bool) -> Self {
        let z = self
            .z
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let p = (i + 1) as f64;
                let r = z * Complex64::from_polar(1.0, 2.0 * p * gamma);
                if reflect {
                    r.conj()
                } else {
                    r
                }
            })
            .collect();
        Self { v0: self.v0, z }
    }

    /// Peak orientation `½ arg z₁`, in `(-π/2, π/2]`.
    pub fn peak_angle(&self) -> f64 {
        0.5 * self.z[0].arg()
    }

    /// Euclidean distance in real coordinates.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut s = (self.v0 - other.v0).powi(2);
        for (a, b) in self.z.iter().zip(&other.z) {
            s += (a - b).norm_sqr();
        }
        s.sqrt()
    }

    pub fn norm(&self) -> f64 {
        let s: f64 = self.z.iter().map(|z| z.norm_sqr()).sum();
        (self.v0 * self.v0 + s).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.v0.is_finite() && self.z.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `self + h·d`.
    pub fn axpy(&self, h: f64, d: &Self) -> Self {
        Self {
            v0: self.v0 + h * d.v0,
            z: self.z.iter().zip(&d.z).map(|(a, b)| a + b * h).collect(),
        }
    }
}

/// `V(x) = v₀ + Σ_p √|J_p| Re(z_p e^{-2ipx})`.
pub fn reconstruct_voltage(state: &CortexState, spec: &ModelSpec, x: f64) -> f64 {
    let mut v = state.v0;
    for (i, z) in state.z.iter().enumerate() {
        let p = (i + 1) as f64;
        let (s, c) = (2.0 * p * x).sin_cos();
        v += spec.sqrt_magnitude(i + 1) * (z.re * c + z.im * s);
    }
    v
}

/// Activity `S(λ V(x))` with the sigmoid variant selected by `spec`.
pub fn reconstruct_activity(state: &CortexState, spec: &ModelSpec, x: f64) -> f64 {
    spec.sigmoid(spec.gain * reconstruct_voltage(state, spec, x))
}

/// Peak angle located by maximising the reconstructed voltage on a grid of
/// `m` points followed by golden-section refinement.
pub fn grid_peak_angle(state: &CortexState, spec: &ModelSpec, m: usize) -> f64 {
    let f = |x: f64| reconstruct_voltage(state, spec, x);
    let h = PI / m as f64;
    let mut best = (-FRAC_PI_2, f64::NEG_INFINITY);
    for j in 0..m {
        let x = -FRAC_PI_2 + j as f64 * h;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    wrap_angle(0.5 * (a + b))
}

/// Maps an orientation to `(-π/2, π/2]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(PI);
    if y > FRAC_PI_2 {
        y -= PI;
    }
    y
}

/// Distance between two orientations modulo π.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn group_act_examples() {
        let s = CortexState::new(0.3, vec![c(0.4, -0.2), c(0.1, 0.5)]);
        assert_eq!(s.group_act(0.0, false), s);
        let t = s.group_act(FRAC_PI_2, false);
        assert!((t.z[0] + s.z[0]).norm() < 1e-15);
        assert!((t.z[1] - s.z[1]).norm() < 1e-15);
        assert_eq!(s.group_act(0.0, true).group_act(0.0, true), s);
    }

    #[test]
    fn real_coordinates_roundtrip() {
        let s = CortexState::new(-0.1, vec![c(1.0, 2.0), c(3.0, -4.0)]);
        assert_eq!(CortexState::from_real(&s.to_real()), s);
    }

    #[test]
    fn voltage_examples() {
        let spec = ModelSpec::new(-1, vec![1.0]);
        let zero = CortexState::zeros(1);
        for x in [-1.0, 0.0, 0.7] {
            assert_eq!(reconstruct_voltage(&zero, &spec, x), 0.0);
        }
        let s = CortexState::new(0.0, vec![c(1.0, 0.0)]);
        for x in [-1.0, 0.0, 0.3, 1.2] {
            assert!((reconstruct_voltage(&s, &spec, x) - (2.0 * x).cos()).abs() < 1e-15);
        }
        assert!(grid_peak_angle(&s, &spec, 64).abs() < 1e-7);
    }

    #[test]
    fn peak_angle_tracks_grid_maximum() {
        let spec = ModelSpec::new(-1, vec![1.5, 0.3]);
        for phi in [-1.2, -0.4, 0.0, 0.5, 1.4] {
            let s = CortexState::new(0.1, vec![Complex64::from_polar(0.8, 2.0 * phi), c(0.0, 0.0)]);
            assert!(angle_distance(s.peak_angle(), phi) < 1e-12);
            assert!(angle_distance(grid_peak_angle(&s, &spec, 128), phi) < 1e-7);
        }
    }

    #[test]
    fn voltage_is_pi_periodic() {
        let spec = ModelSpec::new(1, vec![1.5, -0.7]);
        let s = CortexState::new(0.2, vec![c(0.3, -0.8), c(-0.5, 0.25)]);
        for x in [-1.1, 0.0, 0.4, 2.0] {
            let a = reconstruct_voltage(&s, &spec, x);
            let b = reconstruct_voltage(&s, &spec, x + PI);
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn wrapping() {
        assert!((wrap_angle(PI) - 0.0).abs() < 1e-15);
        assert!((wrap_angle(FRAC_PI_2) - FRAC_PI_2).abs() < 1e-15);
        assert!((wrap_angle(-FRAC_PI_2) - FRAC_PI_2).abs() < 1e-15);
        assert!(angle_distance(0.01, PI - 0.01) < 0.0200001);
    }
}
