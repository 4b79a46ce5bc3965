//! LGN drive expressed through its Fourier coefficients.

use std::borrow::Cow;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RingError};
use crate::model::ModelSpec;

/// Drive `ε I(x)` with `I(x) = I₀ + Σ_k √|J_k| Re(I_k e^{-2ikx})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub i0: f64,
    pub i_k: Vec<Complex64>,
    pub contrast: f64,
}

impl Stimulus {
    /// No drive at all.
    pub fn none(n_modes: usize) -> Self {
        Self {
            i0: 0.0,
            i_k: vec![Complex64::new(0.0, 0.0); n_modes],
            contrast: 0.0,
        }
    }

    pub fn with_contrast(&self, contrast: f64) -> Self {
        Self {
            contrast,
            ..self.clone()
        }
    }

    /// `ε I(x)`.
    pub fn drive(&self, spec: &ModelSpec, x: f64) -> f64 {
        let mut v = self.i0;
        for (i, ik) in self.i_k.iter().enumerate() {
            let p = (i + 1) as f64;
            let (s, c) = (2.0 * p * x).sin_cos();
            v += spec.sqrt_magnitude(i + 1) * (ik.re * c + ik.im * s);
        }
        self.contrast * v
    }

    /// Convex combination `(1 - ψ) self + ψ other` of the unscaled
    /// coefficients, keeping the contrast of `self`.
    pub fn blend(&self, other: &Self, psi: f64) -> Self {
        Self {
            i0: (1.0 - psi) * self.i0 + psi * other.i0,
            i_k: self
                .i_k
                .iter()
                .zip(&other.i_k)
                .map(|(a, b)| a * (1.0 - psi) + b * psi)
                .collect(),
            contrast: self.contrast,
        }
    }

    /// True when all coefficients are real, i.e. the drive is even in `x`.
    pub fn is_reflection_symmetric(&self) -> bool {
        self.i_k.iter().all(|z| z.im == 0.0)
    }
}

/// Canonical LGN drive `ε (1 - β + β cos 2(x - x₀))`.
pub fn make_lgn_stimulus(beta: f64, x0: f64, epsilon: f64, spec: &ModelSpec) -> Result<Stimulus> {
    lgn_with_harmonic(beta, x0, epsilon, spec, 0.0)
}

/// Canonical drive plus a second harmonic with `√|J₂| I₂ = ratio·β`, so the
/// drive reads `ε (1 - β + β cos 2(x - x₀) + ratio β cos 4(x - x₀))`.
pub fn lgn_with_harmonic(beta: f64, x0: f64, epsilon: f64, spec: &ModelSpec, ratio: f64) -> Result<Stimulus> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(RingError::InvalidParameter(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(RingError::InvalidParameter(format!(
            "contrast must be non-negative, got {epsilon}"
        )));
    }
    let n = spec.n_modes;
    let j1 = spec.sqrt_magnitude(1);
    if j1 == 0.0 {
        return Err(RingError::InvalidParameter(
            "|J1| = 0: cannot normalise the first stimulus mode".into(),
        ));
    }
    let mut i_k = vec![Complex64::new(0.0, 0.0); n];
    i_k[0] = Complex64::from_polar(beta / j1, 2.0 * x0);
    if ratio != 0.0 {
        if n < 2 || spec.sqrt_magnitude(2) == 0.0 {
            return Err(RingError::InvalidParameter(
                "second-harmonic drive needs a nonzero J2".into(),
            ));
        }
        i_k[1] = Complex64::from_polar(ratio * beta / spec.sqrt_magnitude(2), 4.0 * x0);
    }
    Ok(Stimulus {
        i0: 1.0 - beta,
        i_k,
        contrast: epsilon,
    })
}

/// A possibly time-dependent stimulus.
pub trait StimulusSource: Sync {
    fn at(&self, t: f64) -> Cow<'_, Stimulus>;
}

impl StimulusSource for Stimulus {
    fn at(&self, _t: f64) -> Cow<'_, Stimulus> {
        Cow::Borrowed(self)
    }
}

/// Stimulus given by a closure of time.
pub struct Scheduled<F>(pub F);

impl<F> StimulusSource for Scheduled<F>
where
    F: Fn(f64) -> Stimulus + Sync,
{
    fn at(&self, t: f64) -> Cow<'_, Stimulus> {
        Cow::Owned((self.0)(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_drive_matches_cosine_profile() {
        let spec = ModelSpec::new(-1, vec![1.5]);
        for x0 in [0.0, 0.3, -1.1, std::f64::consts::FRAC_PI_2] {
            let s = make_lgn_stimulus(0.1, x0, 0.01, &spec).unwrap();
            for j in 0..50 {
                let x = -1.6 + 0.064 * j as f64;
                let want = 0.01 * (0.9 + 0.1 * (2.0 * (x - x0)).cos());
                assert!((s.drive(&spec, x) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn canonical_coefficients() {
        let spec = ModelSpec::new(-1, vec![1.5]);
        let s = make_lgn_stimulus(0.1, 0.0, 0.01, &spec).unwrap();
        assert!((s.i0 - 0.9).abs() < 1e-15);
        assert!((s.i_k[0].re - 0.1 / 1.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.i_k[0].im, 0.0);

        let s = make_lgn_stimulus(0.0, 0.77, 1.0, &spec).unwrap();
        assert_eq!(s.i0, 1.0);
        assert_eq!(s.i_k[0].norm(), 0.0);
    }

    #[test]
    fn second_harmonic_coefficients() {
        let spec = ModelSpec::new(-1, vec![9.0, 6.66]);
        let s = lgn_with_harmonic(0.05, 0.0, 0.01, &spec, 0.1).unwrap();
        assert!((s.i0 - 0.95).abs() < 1e-15);
        assert!((3.0 * s.i_k[0].re - 0.05).abs() < 1e-15);
        assert!((6.66f64.sqrt() * s.i_k[1].re - 0.005).abs() < 1e-15);
        for x in [-0.5f64, 0.0, 0.9] {
            let want = 0.01 * (0.95 + 0.05 * (2.0 * x).cos() + 0.005 * (4.0 * x).cos());
            assert!((s.drive(&spec, x) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let spec = ModelSpec::new(-1, vec![1.5]);
        assert!(make_lgn_stimulus(1.5, 0.0, 0.01, &spec).is_err());
        assert!(make_lgn_stimulus(-0.1, 0.0, 0.01, &spec).is_err());
        let flat = ModelSpec::new(-1, vec![0.0]);
        assert!(make_lgn_stimulus(0.1, 0.0, 0.01, &flat).is_err());
    }
}
