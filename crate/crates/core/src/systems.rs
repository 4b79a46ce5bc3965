//! Equilibrium problems parametrised by the continuable model scalars.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RingError};
use crate::galerkin::RingModel;
use crate::model::ModelSpec;
use crate::solve::{fd_jacobian, fd_jacobian_step, spectrum_stability, JacobianMode, StabilityInfo, STABILITY_MARGIN};
use crate::state::CortexState;
use crate::stimulus::Stimulus;

/// A scalar that continuation can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    /// Nonlinear gain λ.
    Gain,
    /// Stimulus contrast ε.
    Contrast,
    /// Threshold θ.
    Threshold,
    /// Homotopy parameter μ.
    Mu,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Gain => "lambda",
            Param::Contrast => "epsilon",
            Param::Threshold => "theta",
            Param::Mu => "mu",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub gain: f64,
    pub contrast: f64,
    pub threshold: f64,
    pub mu: f64,
}

impl Params {
    pub fn from_spec(spec: &ModelSpec, contrast: f64) -> Self {
        Self {
            gain: spec.gain,
            contrast,
            threshold: spec.threshold,
            mu: spec.homotopy_mu,
        }
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Gain => self.gain,
            Param::Contrast => self.contrast,
            Param::Threshold => self.threshold,
            Param::Mu => self.mu,
        }
    }

    pub fn with(mut self, p: Param, v: f64) -> Self {
        match p {
            Param::Gain => self.gain = v,
            Param::Contrast => self.contrast = v,
            Param::Threshold => self.threshold = v,
            Param::Mu => self.mu = v,
        }
        self
    }

    /// Copies gain, threshold and μ into `spec`.
    pub fn apply(&self, spec: &ModelSpec) -> ModelSpec {
        let mut s = spec.clone();
        s.gain = self.gain;
        s.threshold = self.threshold;
        s.homotopy_mu = self.mu;
        s
    }
}

/// `F(u; params) = 0` on a fixed coordinate chart.
pub trait EquilibriumSystem: Sync {
    fn dim(&self) -> usize;

    fn residual(&self, u: &DVector<f64>, p: &Params) -> DVector<f64>;

    /// Analytic state Jacobian, when available.
    fn analytic_jacobian(&self, _u: &DVector<f64>, _p: &Params) -> Option<DMatrix<f64>> {
        None
    }

    fn state_names(&self) -> Vec<String>;

    /// Stability flags recorded along branches; defaults to the spectrum of `jac`.
    fn stability(&self, _u: &DVector<f64>, _p: &Params, jac: &DMatrix<f64>) -> StabilityInfo {
        spectrum_stability(jac, STABILITY_MARGIN)
    }

    /// Points failing this test are rejected by the continuation corrector.
    fn admissible(&self, _u: &DVector<f64>, _p: &Params) -> bool {
        true
    }

    fn fd_jacobian(&self, u: &DVector<f64>, p: &Params) -> DMatrix<f64> {
        fd_jacobian(&|x: &DVector<f64>| self.residual(x, p), u)
    }

    /// Jacobian according to `mode`; falls back to finite differences when
    /// no analytic form exists.
    fn jacobian(&self, u: &DVector<f64>, p: &Params, mode: JacobianMode) -> DMatrix<f64> {
        match mode {
            JacobianMode::Analytic => self.analytic_jacobian(u, p).unwrap_or_else(|| self.fd_jacobian(u, p)),
            JacobianMode::FiniteDifference { h } => fd_jacobian_step(&|x: &DVector<f64>| self.residual(x, p), u, h),
        }
    }
}

/// Coordinate chart for Galerkin equilibria.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    /// `(v₀, Re z₁, Im z₁, …)`, dimension `2N + 1`.
    Full,
    /// `(v₀, Re z₁, …)` on the reflection-invariant subspace, dimension `N + 1`.
    Reflection,
}

/// Equilibria of the Galerkin system; the stimulus profile is scaled by
/// the continued contrast.
#[derive(Clone, Debug)]
pub struct GalerkinSystem {
    pub model: RingModel,
    pub stim: Stimulus,
    pub chart: Chart,
}

impl GalerkinSystem {
    pub fn new(model: RingModel, stim: Stimulus, chart: Chart) -> Result<Self> {
        if stim.i_k.len() != model.n_modes() {
            return Err(RingError::InvalidParameter(
                "stimulus and model have different mode counts".into(),
            ));
        }
        if chart == Chart::Reflection && !stim.is_reflection_symmetric() {
            return Err(RingError::InvalidParameter(
                "the reflection chart needs a stimulus with real coefficients".into(),
            ));
        }
        Ok(Self { model, stim, chart })
    }

    /// Model at the parameters `p`; `None` when they are invalid (e.g. a
    /// corrector probing a negative gain).
    pub fn model_at(&self, p: &Params) -> Option<RingModel> {
        self.model.with_spec(p.apply(self.model.spec())).ok()
    }

    pub fn stimulus_at(&self, p: &Params) -> Stimulus {
        self.stim.with_contrast(p.contrast)
    }

    pub fn to_state(&self, u: &[f64]) -> CortexState {
        match self.chart {
            Chart::Full => CortexState::from_real(u),
            Chart::Reflection => CortexState::from_reflection_chart(u),
        }
    }

    pub fn from_state(&self, s: &CortexState) -> Vec<f64> {
        match self.chart {
            Chart::Full => s.to_real(),
            Chart::Reflection => s.to_reflection_chart(),
        }
    }

    /// Stability in the full `2N + 1` dimensional space, whatever the chart.
    pub fn full_stability(&self, u: &DVector<f64>, p: &Params) -> StabilityInfo {
        let jac = match self.model_at(p) {
            Some(m) => m.jacobian(&self.to_state(u.as_slice())),
            None => DMatrix::from_element(u.len(), u.len(), f64::NAN),
        };
        spectrum_stability(&jac, STABILITY_MARGIN)
    }
}

impl EquilibriumSystem for GalerkinSystem {
    fn dim(&self) -> usize {
        match self.chart {
            Chart::Full => self.model.dim(),
            Chart::Reflection => self.model.n_modes() + 1,
        }
    }

    fn residual(&self, u: &DVector<f64>, p: &Params) -> DVector<f64> {
        let Some(m) = self.model_at(p) else {
            return DVector::from_element(u.len(), f64::NAN);
        };
        let s = self.stimulus_at(p);
        let d = m.rhs(&self.to_state(u.as_slice()), &s);
        DVector::from_vec(self.from_state(&d))
    }

    fn analytic_jacobian(&self, u: &DVector<f64>, p: &Params) -> Option<DMatrix<f64>> {
        let m = self.model_at(p)?;
        let s = self.to_state(u.as_slice());
        Some(match self.chart {
            Chart::Full => m.jacobian(&s),
            Chart::Reflection => m.jacobian_reflection(&s),
        })
    }

    fn state_names(&self) -> Vec<String> {
        let mut v = vec!["v0".to_string()];
        for k in 1..=self.model.n_modes() {
            v.push(format!("re_z{k}"));
            if self.chart == Chart::Full {
                v.push(format!("im_z{k}"));
            }
        }
        v
    }
}

/// Stability of a Galerkin equilibrium from a central finite-difference
/// Jacobian in the full real coordinates.
pub fn stability(state: &CortexState, stim: &Stimulus, model: &RingModel, newton_tol: f64) -> Result<StabilityInfo> {
    let r = model.rhs(state, stim).to_real();
    let res = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if res > 10.0 * newton_tol {
        return Err(RingError::NotEquilibrium { residual: res });
    }
    let f = |u: &DVector<f64>| DVector::from_vec(model.rhs_real(u.as_slice(), stim));
    let jac = fd_jacobian(&f, &DVector::from_vec(state.to_real()));
    Ok(spectrum_stability(&jac, STABILITY_MARGIN))
}
