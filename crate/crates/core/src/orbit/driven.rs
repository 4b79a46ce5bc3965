//! Forced N = 2 equilibria in reflection-symmetric coordinates.
//!
//! Forcing breaks O(2), so these runs use the Cartesian Galerkin system on
//! the fixed-point set of the reflection (`Im z = 0`).

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuation::{continue_branch, slice_branch, ContinuationConfig};
use crate::error::{Result, RingError};
use crate::galerkin::RingModel;
use crate::solve::{newton_solve_with, NewtonConfig, StabilityInfo};
use crate::state::CortexState;
use crate::stimulus::Stimulus;
use crate::systems::{Chart, EquilibriumSystem, GalerkinSystem, Param, Params};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DrivenEquilibrium {
    pub state: CortexState,
    /// Within the reflection-invariant subspace.
    pub chart_stability: StabilityInfo,
    pub full_stability: StabilityInfo,
}

impl DrivenEquilibrium {
    /// `|z₂| / |z₁|`.
    pub fn mode_ratio(&self) -> f64 {
        self.state.z[1].norm() / self.state.z[0].norm()
    }
}

fn classify(sys: &GalerkinSystem, u: &DVector<f64>, p: &Params) -> DrivenEquilibrium {
    let jac = sys.jacobian(u, p, crate::solve::JacobianMode::Analytic);
    DrivenEquilibrium {
        state: sys.to_state(u.as_slice()),
        chart_stability: sys.stability(u, p, &jac),
        full_stability: sys.full_stability(u, p),
    }
}

/// Equilibria of `model` under the real stimulus `stim` found by Newton
/// from a grid of seeds in the reflection chart, deduplicated.
pub fn reflection_equilibria(model: &RingModel, stim: &Stimulus, per_axis: usize) -> Result<Vec<DrivenEquilibrium>> {
    if per_axis < 2 {
        return Err(RingError::EmptyGrid("seed grid"));
    }
    let sys = GalerkinSystem::new(model.clone(), stim.clone(), Chart::Reflection)?;
    let p = Params::from_spec(model.spec(), stim.contrast);
    let dim = sys.dim();
    let axis = |j: usize, lo: f64, hi: f64| lo + (hi - lo) * j as f64 / (per_axis - 1) as f64;
    let total = per_axis.pow(dim as u32);
    let cfg = NewtonConfig {
        tol: 1e-12,
        ..Default::default()
    };
    let found: Vec<DVector<f64>> = (0..total)
        .into_par_iter()
        .filter_map(|mut idx| {
            let mut u = DVector::zeros(dim);
            for c in 0..dim {
                let (lo, hi) = if c == 0 { (-1.0, 0.5) } else { (-1.0, 1.0) };
                u[c] = axis(idx % per_axis, lo, hi);
                idx /= per_axis;
            }
            newton_solve_with(
                &|x: &DVector<f64>| sys.residual(x, &p),
                &|x: &DVector<f64>| sys.jacobian(x, &p, crate::solve::JacobianMode::Analytic),
                &u,
                &cfg,
            )
            .ok()
            .map(|o| o.solution)
        })
        .collect();
    let mut uniq: Vec<DVector<f64>> = Vec::new();
    for u in found {
        if !uniq.iter().any(|v| (v - &u).amax() < 1e-7) {
            uniq.push(u);
        }
    }
    uniq.sort_by(|a, b| a[1].total_cmp(&b[1]));
    Ok(uniq.iter().map(|u| classify(&sys, u, &p)).collect())
}

/// The tuned pair of a forced N = 2 model close to the fold of the
/// 90-degree family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DrivenPair {
    /// Gain at which the 90-degree family is born.
    pub fold_gain: f64,
    pub gain: f64,
    /// Peaks with the stimulus (`Re z₁ > 0`).
    pub tc0: DrivenEquilibrium,
    /// Stable member of the 90-degree family (`Re z₁ < 0`).
    pub tc90: DrivenEquilibrium,
    pub all: Vec<DrivenEquilibrium>,
}

/// Locates the fold of the `Re z₁ < 0` family by continuing it down in λ
/// from `lambda_hi`, then collects the equilibria at `factor` times the fold.
pub fn driven_pair(
    model: &RingModel,
    stim: &Stimulus,
    lambda_hi: f64,
    factor: f64,
    cfg: &ContinuationConfig,
) -> Result<DrivenPair> {
    let hi = model.with_spec(model.spec().clone().with_gain(lambda_hi))?;
    let start = reflection_equilibria(&hi, stim, 7)?
        .into_iter()
        .find(|e| e.state.z[0].re < 0.0 && e.chart_stability.stable())
        .ok_or_else(|| RingError::NotBistable(format!("no stable 90-degree state at gain {lambda_hi}")))?;
    let sys = GalerkinSystem::new(hi.clone(), stim.clone(), Chart::Reflection)?;
    let base = Params::from_spec(hi.spec(), stim.contrast);
    let u0 = start.state.to_reflection_chart();
    let branch = continue_branch(&sys, &base, Param::Gain, &u0, (0.0, lambda_hi), -1.0, cfg)?;
    let fold_gain = branch
        .folds()
        .map(|f| f.params[0])
        .next()
        .ok_or_else(|| RingError::NotBistable("90-degree family has no fold".into()))?;
    let gain = factor * fold_gain;
    let p = base.with(Param::Gain, gain);
    let mut all: Vec<DrivenEquilibrium> = slice_branch(&sys, &base, Param::Gain, &branch, gain, cfg)
        .iter()
        .map(|u| classify(&sys, &DVector::from_column_slice(u), &p))
        .collect();
    let at = model.with_spec(model.spec().clone().with_gain(gain))?;
    for e in reflection_equilibria(&at, stim, 7)? {
        if !all.iter().any(|a| a.state.distance(&e.state) < 1e-7) {
            all.push(e);
        }
    }
    let pick = |pos: bool| {
        all.iter()
            .filter(|e| (e.state.z[0].re > 0.0) == pos && e.chart_stability.stable())
            .max_by(|a, b| a.state.z[0].norm().total_cmp(&b.state.z[0].norm()))
            .cloned()
    };
    let tc0 = pick(true).ok_or_else(|| RingError::NotBistable("no stable 0-degree state".into()))?;
    let tc90 = pick(false).ok_or_else(|| RingError::NotBistable("no stable 90-degree state".into()))?;
    Ok(DrivenPair {
        fold_gain,
        gain,
        tc0,
        tc90,
        all,
    })
}
