//! Method-of-lines simulation of the untruncated ring equation.
//!
//! `τ V̇ = -V + J * g(λV) + c + ε I`, with `J(x) = ε₀ + Σ_p J_p cos 2px` and the
//! convolution `(1/π) ∫ J(x - y) f(y) dy` replaced by the uniform rule on
//! `M` grid points. Used as an oracle for the Galerkin reduction.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Result, RingError};
use crate::integrate::{rk4_vec, step_count};
use crate::model::ModelSpec;
use crate::state::{reconstruct_voltage, CortexState};
use crate::stimulus::StimulusSource;

/// Grid points `-π/2 + jπ/M`.
pub fn ring_grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| -FRAC_PI_2 + PI * j as f64 / m as f64).collect()
}

/// Samples the Galerkin voltage on the grid.
pub fn sample_state(state: &CortexState, spec: &ModelSpec, m: usize) -> Vec<f64> {
    ring_grid(m)
        .into_iter()
        .map(|x| reconstruct_voltage(state, spec, x))
        .collect()
}

/// Projects grid values onto `span{1, cos 2px, sin 2px : p ≤ N}`.
pub fn project(values: &[f64], spec: &ModelSpec) -> CortexState {
    let m = values.len();
    let grid = ring_grid(m);
    let v0 = values.iter().sum::<f64>() / m as f64;
    let z = (1..=spec.n_modes)
        .map(|p| {
            let c: Complex64 = grid
                .iter()
                .zip(values)
                .map(|(&x, &v)| Complex64::from_polar(v, 2.0 * p as f64 * x))
                .sum::<Complex64>()
                / m as f64;
            let a = spec.sqrt_magnitude(p);
            if a == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                c * (2.0 / a)
            }
        })
        .collect();
    CortexState { v0, z }
}

#[derive(Clone, Debug)]
pub struct SampledTrajectory {
    pub grid: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Discretised ring operator.
pub struct FullRing {
    spec: ModelSpec,
    grid: Vec<f64>,
    /// `J(xᵢ - xⱼ) / M`, row-major.
    conv: Vec<f64>,
}

impl FullRing {
    pub fn new(spec: &ModelSpec, m: usize) -> Result<Self> {
        spec.validate()?;
        if m < 4 * spec.n_modes + 2 {
            return Err(RingError::InvalidParameter(format!(
                "need at least {} grid points for {} modes, got {m}",
                4 * spec.n_modes + 2,
                spec.n_modes
            )));
        }
        let grid = ring_grid(m);
        let mut conv = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let d = grid[i] - grid[j];
                let mut jv = spec.eps0();
                for (p, &jp) in spec.j_weights.iter().enumerate() {
                    jv += jp * (2.0 * (p + 1) as f64 * d).cos();
                }
                conv[i * m + j] = jv / m as f64;
            }
        }
        Ok(Self {
            spec: spec.clone(),
            grid,
            conv,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn rhs<S: StimulusSource + ?Sized>(&self, t: f64, v: &[f64], src: &S) -> Vec<f64> {
        let m = self.grid.len();
        let lam = self.spec.gain;
        let g: Vec<f64> = v.iter().map(|&x| self.spec.shape(lam * x)).collect();
        let stim = src.at(t);
        let c = self.spec.v0_offset();
        let tau = self.spec.time_constant;
        (0..m)
            .map(|i| {
                let row = &self.conv[i * m..(i + 1) * m];
                let jg: f64 = row.iter().zip(&g).map(|(a, b)| a * b).sum();
                (-v[i] + jg + c + stim.drive(&self.spec, self.grid[i])) / tau
            })
            .collect()
    }
}

/// RK4 simulation of the full ring from grid values `v0`.
pub fn full_ring_simulate<S: StimulusSource + ?Sized>(
    v0: &[f64],
    src: &S,
    spec: &ModelSpec,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<SampledTrajectory> {
    let ring = FullRing::new(spec, v0.len())?;
    let (n, h) = step_count(t_end, dt)?;
    let every = sample_every.max(1);
    let f = |t: f64, y: &[f64]| ring.rhs(t, y, src);
    let mut out = SampledTrajectory {
        grid: ring.grid.clone(),
        times: vec![0.0],
        values: vec![v0.to_vec()],
    };
    let mut y = v0.to_vec();
    for step in 0..n {
        y = rk4_vec(&f, step as f64 * h, &y, h);
        let t = (step + 1) as f64 * h;
        if y.iter().any(|x| !x.is_finite()) {
            return Err(RingError::NonFinite { t });
        }
        if (step + 1) % every == 0 || step + 1 == n {
            out.times.push(t);
            out.values.push(y.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_inverts_sampling() {
        let spec = ModelSpec::new(-1, vec![1.5, -0.4]);
        let s = CortexState::new(0.2, vec![Complex64::new(0.3, -0.1), Complex64::new(-0.2, 0.6)]);
        let p = project(&sample_state(&s, &spec, 32), &spec);
        assert!(p.distance(&s) < 1e-14);
    }

    #[test]
    fn grid_too_small() {
        let spec = ModelSpec::new(-1, vec![1.5, 1.0]);
        assert!(FullRing::new(&spec, 9).is_err());
        assert!(FullRing::new(&spec, 10).is_ok());
    }
}
