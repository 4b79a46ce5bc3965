//! Model parameters and the sigmoid family.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RingError};

/// Logistic sigmoid `1 / (1 + e^{-x})`, evaluated without overflow.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivative of the logistic sigmoid, `S (1 - S)`.
#[inline]
pub fn logistic_slope(x: f64) -> f64 {
    let s = logistic(x);
    s * (1.0 - s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmoidKind {
    /// `S(x) = 1 / (1 + e^{-x})`, with the threshold entering as `-θ`.
    #[default]
    Standard,
    /// `S₀(x) = S(x) - 1/2`, no threshold term.
    Centered,
    /// `S₀(x) + μ(1/2 - θ)`, interpolating between the other two.
    Homotopy,
}

/// All parameters of the ring model.
///
/// The connectivity is `J(x) = ε₀ + Σ_p J_p cos(2px)`; `j_weights` holds the
/// signed `J_p`, from which the magnitude `|J_p|` and sign `ε_p` are derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n_modes: usize,
    pub j0_sign: i8,
    pub j_weights: Vec<f64>,
    pub gain: f64,
    #[serde(default)]
    pub threshold: f64,
    #[serde(default = "one")]
    pub time_constant: f64,
    #[serde(default)]
    pub homotopy_mu: f64,
    #[serde(default)]
    pub sigmoid_kind: SigmoidKind,
}

fn one() -> f64 {
    1.0
}

impl ModelSpec {
    /// Model with the given connectivity, unit time constant, standard
    /// sigmoid and zero gain/threshold.
    pub fn new(j0_sign: i8, j_weights: Vec<f64>) -> Self {
        Self {
            n_modes: j_weights.len(),
            j0_sign,
            j_weights,
            gain: 0.0,
            threshold: 0.0,
            time_constant: 1.0,
            homotopy_mu: 0.0,
            sigmoid_kind: SigmoidKind::Standard,
        }
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_kind(mut self, kind: SigmoidKind) -> Self {
        self.sigmoid_kind = kind;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.homotopy_mu = mu;
        self
    }

    pub fn with_time_constant(mut self, tau: f64) -> Self {
        self.time_constant = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RingError::InvalidParameter(m));
        if self.n_modes == 0 {
            return bad("n_modes must be at least 1".into());
        }
        if self.j_weights.len() != self.n_modes {
            return bad(format!(
                "j_weights has {} entries but n_modes = {}",
                self.j_weights.len(),
                self.n_modes
            ));
        }
        if self.j0_sign != 1 && self.j0_sign != -1 {
            return bad(format!("j0_sign must be -1 or +1, got {}", self.j0_sign));
        }
        if self.j_weights.iter().any(|w| !w.is_finite()) {
            return bad("j_weights must be finite".into());
        }
        if !(self.gain >= 0.0 && self.gain.is_finite()) {
            return bad(format!("gain must be a finite value >= 0, got {}", self.gain));
        }
        if !self.threshold.is_finite() {
            return bad("threshold must be finite".into());
        }
        if !(self.time_constant > 0.0 && self.time_constant.is_finite()) {
            return bad(format!("time_constant must be positive, got {}", self.time_constant));
        }
        if !(0.0..=1.0).contains(&self.homotopy_mu) {
            return bad(format!("homotopy_mu must lie in [0, 1], got {}", self.homotopy_mu));
        }
        Ok(())
    }

    pub fn eps0(&self) -> f64 {
        f64::from(self.j0_sign)
    }

    /// `|J_k|` for `k = 1..=N`.
    pub fn magnitude(&self, k: usize) -> f64 {
        self.j_weights[k - 1].abs()
    }

    /// `ε_k ∈ {-1, +1}` for `k = 1..=N`; a zero weight counts as `+1`.
    pub fn sign(&self, k: usize) -> f64 {
        if self.j_weights[k - 1] < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// `√|J_k|`.
    pub fn sqrt_magnitude(&self, k: usize) -> f64 {
        self.magnitude(k).sqrt()
    }

    /// The selected sigmoid variant evaluated at `x`.
    pub fn sigmoid(&self, x: f64) -> f64 {
        match self.sigmoid_kind {
            SigmoidKind::Standard => logistic(x),
            SigmoidKind::Centered => logistic(x) - 0.5,
            SigmoidKind::Homotopy => logistic(x) - 0.5 + self.homotopy_mu * (0.5 - self.threshold),
        }
    }

    /// Shape `g` entering the Fourier integrals: `S` for the standard
    /// kind, `S₀` otherwise.
    pub fn shape(&self, x: f64) -> f64 {
        match self.sigmoid_kind {
            SigmoidKind::Standard => logistic(x),
            SigmoidKind::Centered | SigmoidKind::Homotopy => logistic(x) - 0.5,
        }
    }

    /// Constant added to the `v₀` equation next to `ε₀ M₀[g]`.
    ///
    /// Chosen so that the homotopy kind at `μ = 1` reproduces the standard
    /// model exactly: `ε₀ M₀[S] - θ = ε₀ M₀[S₀] + (ε₀/2 - θ)`.
    pub fn v0_offset(&self) -> f64 {
        match self.sigmoid_kind {
            SigmoidKind::Standard => -self.threshold,
            SigmoidKind::Centered => 0.0,
            SigmoidKind::Homotopy => self.homotopy_mu * (0.5 * self.eps0() - self.threshold),
        }
    }
}

/// Free-function form of [`ModelSpec::sigmoid`].
pub fn sigmoid_eval(x: f64, spec: &ModelSpec) -> f64 {
    spec.sigmoid(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelSpec {
        ModelSpec::new(-1, vec![1.5])
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid_eval(0.0, &base()), 0.5);
        assert_eq!(sigmoid_eval(0.0, &base().with_kind(SigmoidKind::Centered)), 0.0);
        let h = base().with_kind(SigmoidKind::Homotopy).with_mu(1.0).with_threshold(0.1);
        assert!((sigmoid_eval(0.0, &h) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn standard_sigmoid_is_in_open_unit_interval() {
        for x in [-700.0, -30.0, -1.0, 0.0, 1.0, 30.0] {
            let s = logistic(x);
            assert!((0.0..=1.0).contains(&s));
        }
        assert!(logistic(-20.0) > 0.0 && logistic(20.0) < 1.0);
    }

    #[test]
    fn homotopy_endpoints() {
        let c = base().with_kind(SigmoidKind::Centered).with_threshold(0.3);
        let h0 = c.clone().with_kind(SigmoidKind::Homotopy).with_mu(0.0);
        for x in [-3.0, 0.0, 2.5] {
            assert_eq!(h0.sigmoid(x), c.sigmoid(x));
            assert_eq!(h0.shape(x), c.shape(x));
        }
        assert_eq!(h0.v0_offset(), 0.0);

        let s = base().with_threshold(0.3);
        let h1 = s.clone().with_kind(SigmoidKind::Homotopy).with_mu(1.0);
        // ε₀ g + offset must coincide with the standard model.
        for x in [-3.0, 0.0, 2.5] {
            let lhs = s.eps0() * s.shape(x) + s.v0_offset();
            let rhs = h1.eps0() * h1.shape(x) + h1.v0_offset();
            assert!((lhs - rhs).abs() < 1e-15);
        }
    }

    #[test]
    fn validation() {
        assert!(base().validate().is_ok());
        let mut m = base();
        m.j0_sign = 0;
        assert!(m.validate().is_err());
        assert!(base().with_time_constant(0.0).validate().is_err());
        assert!(base().with_mu(1.5).validate().is_err());
        let mut m = base();
        m.n_modes = 2;
        assert!(m.validate().is_err());
        let mut m = base();
        m.gain = -1.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn strict_json() {
        let ok = r#"{"n_modes":1,"j0_sign":-1,"j_weights":[1.5],"gain":15.0}"#;
        let m: ModelSpec = serde_json::from_str(ok).unwrap();
        assert_eq!(m.time_constant, 1.0);
        let bad = r#"{"n_modes":1,"j0_sign":-1,"j_weights":[1.5],"gain":15.0,"extra":1}"#;
        assert!(serde_json::from_str::<ModelSpec>(bad).is_err());
    }
}
