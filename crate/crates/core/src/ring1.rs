//! Single-mode (N = 1) results: polar form, phase-locked equilibrium
//! families, the pitchfork condition, the (J₁, θ) existence boundary and
//! the half-width of tuning curves.
//!
//! With `z₁ = ρ e^{2iφ}` and `V = v₀ + √J₁ ρ cos 2(x - φ)`:
//!
//! ```text
//! τ v̇₀   = -v₀ + ε₀ B₀ + c + ε I₀
//! τ ρ̇    = -ρ + ε₁ √J₁ B₁ + ε|I₁| cos(ψ - 2φ)
//! 2τ ρ φ̇ = ε|I₁| sin(ψ - 2φ)
//! B₀     = (1/π) ∫ g(λV) dx
//! B₁     = (λ √J₁ ρ / π) ∫ g'(λV) sin² 2x dx
//! ```
//!
//! where `ψ = arg I₁`. The `B₁` form follows from integrating the first
//! Fourier moment by parts.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RingError};
use crate::galerkin::RingModel;
use crate::model::{logistic, logistic_slope, ModelSpec, SigmoidKind};
use crate::quadrature::{Quadrature, DEFAULT_GAUSS_ORDER};
use crate::solve::{newton_solve_with, spectrum_stability, NewtonConfig, StabilityInfo, STABILITY_MARGIN};
use crate::state::CortexState;
use crate::stimulus::Stimulus;
use crate::systems::{EquilibriumSystem, Params};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub v0: f64,
    pub rho: f64,
    pub phi: f64,
}

impl PolarState {
    pub fn from_state(s: &CortexState) -> Self {
        Self {
            v0: s.v0,
            rho: s.z[0].norm(),
            phi: 0.5 * s.z[0].arg(),
        }
    }

    pub fn to_state(&self) -> CortexState {
        CortexState::new(
            self.v0,
            vec![num_complex::Complex64::from_polar(self.rho, 2.0 * self.phi)],
        )
    }
}

/// Phase-locked family: `φ = 0` (even) or `φ = π/2` (odd).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// `cos 2φ` for the locked phase.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Integrals of the polar form at `(v₀, ρ)`.
struct PolarIntegrals {
    b0: f64,
    b1: f64,
    db0_dv: f64,
    db0_drho: f64,
    db1_dv: f64,
    db1_drho: f64,
}

#[derive(Clone, Debug)]
struct PolarKernel {
    quad: Quadrature,
}

impl PolarKernel {
    fn new() -> Self {
        Self {
            quad: Quadrature::gauss_legendre(DEFAULT_GAUSS_ORDER).expect("default order is valid"),
        }
    }

    fn integrals(&self, spec: &ModelSpec, v0: f64, rho: f64) -> PolarIntegrals {
        let lam = spec.gain;
        let a = spec.sqrt_magnitude(1);
        let (mut b0, mut k, mut s1, mut c1, mut s2v, mut s2c) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &w) in self.quad.nodes().iter().zip(self.quad.weights()) {
            let (sn, cs) = (2.0 * x).sin_cos();
            let u = lam * (v0 + a * rho * cs);
            let g = spec.shape(u);
            let sp = logistic_slope(u);
            let spp = sp * (1.0 - 2.0 * logistic(u));
            let sin2 = sn * sn;
            b0 += w * g;
            k += w * sp * sin2;
            s1 += w * sp;
            c1 += w * sp * cs;
            s2v += w * spp * sin2;
            s2c += w * spp * sin2 * cs;
        }
        PolarIntegrals {
            b0,
            b1: lam * a * rho * k,
            db0_dv: lam * s1,
            db0_drho: lam * a * c1,
            db1_dv: lam * a * rho * lam * s2v,
            db1_drho: lam * a * k + lam * a * rho * lam * a * s2c,
        }
    }
}

/// Polar vector field. Fails when `ρ = 0`, where the phase equation is singular.
pub fn polar_rhs(p: &PolarState, stim: &Stimulus, spec: &ModelSpec) -> Result<PolarState> {
    check_n1(spec)?;
    if p.rho == 0.0 {
        return Err(RingError::DegeneratePolar);
    }
    let k = PolarKernel::new();
    let it = k.integrals(spec, p.v0, p.rho);
    let tau = spec.time_constant;
    let eps = stim.contrast;
    let (m1, psi) = (stim.i_k[0].norm(), stim.i_k[0].arg());
    Ok(PolarState {
        v0: (-p.v0 + spec.eps0() * it.b0 + spec.v0_offset() + eps * stim.i0) / tau,
        rho: (-p.rho + spec.sign(1) * spec.sqrt_magnitude(1) * it.b1 + eps * m1 * (psi - 2.0 * p.phi).cos()) / tau,
        phi: eps * m1 * (psi - 2.0 * p.phi).sin() / (2.0 * p.rho * tau),
    })
}

fn check_n1(spec: &ModelSpec) -> Result<()> {
    spec.validate()?;
    if spec.n_modes != 1 {
        return Err(RingError::InvalidParameter(format!(
            "single-mode analysis needs n_modes = 1, got {}",
            spec.n_modes
        )));
    }
    Ok(())
}

/// Equilibria with the phase locked to `φ = 0` or `π/2`, in `(v₀, ρ)` with
/// `ρ` allowed to change sign. Requires a stimulus peaked at `x₀ = 0`.
#[derive(Clone, Debug)]
pub struct PolarSystem {
    spec: ModelSpec,
    i0: f64,
    i1: f64,
    parity: Parity,
    kernel: PolarKernel,
}

impl PolarSystem {
    pub fn new(spec: &ModelSpec, stim: &Stimulus, parity: Parity) -> Result<Self> {
        check_n1(spec)?;
        if stim.i_k[0].im != 0.0 || stim.i_k[0].re < 0.0 {
            return Err(RingError::InvalidParameter(
                "phase-locked families need a stimulus peaked at x0 = 0".into(),
            ));
        }
        Ok(Self {
            spec: spec.clone(),
            i0: stim.i0,
            i1: stim.i_k[0].re,
            parity,
            kernel: PolarKernel::new(),
        })
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Growth rate of a phase perturbation at an equilibrium `(v₀, ρ)`.
    pub fn phase_eigenvalue(&self, u: &DVector<f64>, p: &Params) -> f64 {
        let c = p.contrast * self.i1;
        -self.parity.sign() * c / (u[1] * self.spec.time_constant)
    }

    /// The Cartesian state for an equilibrium `(v₀, ρ)`.
    pub fn to_state(&self, u: &[f64]) -> CortexState {
        let rho = u[1] * self.parity.sign();
        CortexState::new(u[0], vec![num_complex::Complex64::new(rho, 0.0)])
    }

    /// Stability in the full three-dimensional phase space: chart
    /// eigenvalues plus the phase eigenvalue.
    pub fn full_stability(&self, u: &DVector<f64>, p: &Params) -> StabilityInfo {
        let j = self.analytic_jacobian(u, p).expect("analytic");
        let mut s = spectrum_stability(&j, STABILITY_MARGIN);
        let ph = self.phase_eigenvalue(u, p);
        s.eigenvalues.push(num_complex::Complex64::new(ph, 0.0));
        s.eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re));
        s.n_unstable += usize::from(ph > STABILITY_MARGIN);
        s.leading_real = s.leading_real.max(ph);
        s
    }
}

impl EquilibriumSystem for PolarSystem {
    fn dim(&self) -> usize {
        2
    }

    fn residual(&self, u: &DVector<f64>, p: &Params) -> DVector<f64> {
        let spec = p.apply(&self.spec);
        let it = self.kernel.integrals(&spec, u[0], u[1]);
        let tau = spec.time_constant;
        let c = p.contrast * self.i1 * self.parity.sign();
        DVector::from_vec(vec![
            (-u[0] + spec.eps0() * it.b0 + spec.v0_offset() + p.contrast * self.i0) / tau,
            (-u[1] + spec.sign(1) * spec.sqrt_magnitude(1) * it.b1 + c) / tau,
        ])
    }

    fn analytic_jacobian(&self, u: &DVector<f64>, p: &Params) -> Option<DMatrix<f64>> {
        let spec = p.apply(&self.spec);
        let it = self.kernel.integrals(&spec, u[0], u[1]);
        let tau = spec.time_constant;
        let e1 = spec.sign(1) * spec.sqrt_magnitude(1);
        Some(
            DMatrix::from_row_slice(
                2,
                2,
                &[
                    -1.0 + spec.eps0() * it.db0_dv,
                    spec.eps0() * it.db0_drho,
                    e1 * it.db1_dv,
                    -1.0 + e1 * it.db1_drho,
                ],
            ) / tau,
        )
    }

    fn state_names(&self) -> Vec<String> {
        vec![
            "v0".into(),
            match self.parity {
                Parity::Even => "rho_e".into(),
                Parity::Odd => "rho_o".into(),
            },
        ]
    }
}

/// Classification of an N = 1 equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tuning {
    /// Activity peaked at the stimulus orientation.
    Tc0,
    /// Activity peaked orthogonally to the stimulus.
    Tc90,
    Untuned,
}

/// Modulation `λ √J₁ |ρ|` below which an equilibrium counts as untuned.
pub const TUNED_MODULATION: f64 = 0.5;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct N1Equilibrium {
    pub v0: f64,
    /// Signed amplitude in the even family (`ρ < 0` means `φ = π/2`).
    pub rho: f64,
    pub tuning: Tuning,
    /// Stability in the phase-locked `(v₀, ρ)` chart.
    pub chart_stability: StabilityInfo,
    /// Stability in the full Cartesian space.
    pub full_stability: StabilityInfo,
}

impl N1Equilibrium {
    pub fn state(&self) -> CortexState {
        CortexState::new(self.v0, vec![num_complex::Complex64::new(self.rho, 0.0)])
    }
}

/// All phase-locked equilibria of the forced single-mode model, found by
/// Newton from an `m × m` grid of seeds covering the absorbing region.
pub fn n1_equilibria(spec: &ModelSpec, stim: &Stimulus, m: usize) -> Result<Vec<N1Equilibrium>> {
    let sys = PolarSystem::new(spec, stim, Parity::Even)?;
    let p = Params::from_spec(spec, stim.contrast);
    let vmax = 1.0 + spec.threshold.abs() + stim.contrast * stim.i0.abs() + 0.1;
    let rmax = spec.sqrt_magnitude(1) + stim.contrast * stim.i_k[0].norm() + 0.1;
    let cfg = NewtonConfig {
        tol: 1e-12,
        ..NewtonConfig::default()
    };
    let seeds: Vec<(f64, f64)> = (0..m)
        .flat_map(|i| {
            (0..m).map(move |j| {
                let a = -vmax + 2.0 * vmax * (i as f64 + 0.5) / m as f64;
                let b = -rmax + 2.0 * rmax * (j as f64 + 0.5) / m as f64;
                (a, b)
            })
        })
        .collect();
    let sols: Vec<DVector<f64>> = seeds
        .par_iter()
        .filter_map(|&(a, b)| {
            newton_solve_with(
                &|u: &DVector<f64>| sys.residual(u, &p),
                &|u: &DVector<f64>| sys.analytic_jacobian(u, &p).expect("analytic"),
                &DVector::from_vec(vec![a, b]),
                &cfg,
            )
            .ok()
            .map(|o| o.solution)
        })
        .collect();
    let mut uniq: Vec<DVector<f64>> = Vec::new();
    for s in sols {
        if !uniq.iter().any(|u| (u - &s).norm() < 1e-7) {
            uniq.push(s);
        }
    }
    uniq.sort_by(|a, b| b[1].total_cmp(&a[1]));
    let model = RingModel::new(spec.clone())?;
    Ok(uniq
        .into_iter()
        .map(|u| {
            let jac = sys.analytic_jacobian(&u, &p).expect("analytic");
            let chart = spectrum_stability(&jac, STABILITY_MARGIN);
            let state = sys.to_state(u.as_slice());
            let full = spectrum_stability(&model.jacobian(&state), STABILITY_MARGIN);
            let modulation = spec.gain * spec.sqrt_magnitude(1) * u[1].abs();
            let tuning = if modulation < TUNED_MODULATION {
                Tuning::Untuned
            } else if u[1] > 0.0 {
                Tuning::Tc0
            } else {
                Tuning::Tc90
            };
            N1Equilibrium {
                v0: u[0],
                rho: u[1],
                tuning,
                chart_stability: chart,
                full_stability: full,
            }
        })
        .collect())
}

/// Smallest gain `λ*` (with `v₀*`) at which the untuned state of the
/// unforced standard model undergoes the symmetry-breaking pitchfork:
/// `v₀ = ε₀ S(λv₀) - θ` and `λ S'(λv₀) J₁ / 2 = 1`.
///
/// With `U = S(λv₀)` the second equation gives `λ = 2 / (J₁ U(1-U))` and
/// the first becomes the scalar equation
/// `2(ε₀U - θ) = J₁ U(1-U) ln(U/(1-U))` on `0 < U < 1`.
pub fn pitchfork_condition(j1: f64, theta: f64, eps0: f64) -> Option<(f64, f64)> {
    if !(j1 > 0.0) {
        return None;
    }
    let h = |s: f64| {
        // parametrise U = S(s) to resolve both ends of (0, 1)
        let u = logistic(s);
        2.0 * (eps0 * u - theta) - j1 * u * (1.0 - u) * s
    };
    let n = 20_000;
    let (lo, hi) = (-40.0, 40.0);
    let mut best: Option<(f64, f64)> = None;
    let mut prev_s = lo;
    let mut prev_h = h(lo);
    for i in 1..=n {
        let s = lo + (hi - lo) * i as f64 / n as f64;
        let hs = h(s);
        if prev_h == 0.0 || prev_h * hs < 0.0 {
            let (mut a, mut b, mut ha) = (prev_s, s, prev_h);
            if prev_h != 0.0 {
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    let hm = h(m);
                    if (hm > 0.0) == (ha > 0.0) {
                        a = m;
                        ha = hm;
                    } else {
                        b = m;
                    }
                    if b - a < 1e-15 * (1.0 + a.abs()) {
                        break;
                    }
                }
            }
            let root = if prev_h == 0.0 { prev_s } else { 0.5 * (a + b) };
            let u = logistic(root);
            let lam = 2.0 / (j1 * u * (1.0 - u));
            let v0 = eps0 * u - theta;
            if best.is_none_or(|(l, _)| lam < l) {
                best = Some((lam, v0));
            }
        }
        prev_s = s;
        prev_h = hs;
    }
    best
}

/// [`pitchfork_condition`] restricted to `λ* ≤ lambda_max`.
pub fn pitchfork_within(j1: f64, theta: f64, eps0: f64, lambda_max: f64) -> Option<(f64, f64)> {
    pitchfork_condition(j1, theta, eps0).filter(|&(l, _)| l <= lambda_max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBoundary {
    pub eps0: f64,
    /// `(θ, J₁_min)`; `J₁_min` is `None` when no grid value admits tuning.
    pub samples: Vec<(f64, Option<f64>)>,
}

impl ThresholdBoundary {
    /// CSV `theta,j1_min,eps0` (rows without a boundary are skipped).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "theta,j1_min,eps0")?;
        for (t, j) in &self.samples {
            if let Some(j) = j {
                writeln!(w, "{t},{j},{}", self.eps0)?;
            }
        }
        Ok(())
    }
}

/// Resolution of the boundary bisection in `J₁`.
pub const BOUNDARY_TOL: f64 = 1e-3;

/// Minimal `J₁` admitting a tuned branch (pitchfork with `λ* ≤ λ_max`) at
/// each `θ`, refined by bisection between grid values.
pub fn threshold_boundary(
    eps0: f64,
    theta_grid: &[f64],
    j1_grid: &[f64],
    lambda_max: f64,
) -> Result<ThresholdBoundary> {
    if theta_grid.is_empty() {
        return Err(RingError::EmptyGrid("theta"));
    }
    if j1_grid.is_empty() {
        return Err(RingError::EmptyGrid("J1"));
    }
    let exists = |t: f64, j: f64| pitchfork_within(j, t, eps0, lambda_max).is_some();
    let samples = theta_grid
        .par_iter()
        .map(|&t| {
            let first = j1_grid.iter().position(|&j| exists(t, j))?;
            if first == 0 {
                return Some(j1_grid[0]);
            }
            let (mut a, mut b) = (j1_grid[first - 1], j1_grid[first]);
            while b - a > BOUNDARY_TOL {
                let m = 0.5 * (a + b);
                if exists(t, m) {
                    b = m;
                } else {
                    a = m;
                }
            }
            Some(b)
        })
        .zip(theta_grid.par_iter())
        .map(|(j, &t)| (t, j))
        .collect();
    Ok(ThresholdBoundary { eps0, samples })
}

/// Half-width at half height of `x ↦ S(a + b cos 2x)` with `a = λ(v₀ - θ)`,
/// `b = λ √(π₁ J₁)`. `None` when the curve never drops to half height.
pub fn tuning_halfwidth(v0f: f64, pi1f: f64, lambda: f64, theta: f64, j1: f64) -> Option<f64> {
    let a = lambda * (v0f - theta);
    let b = lambda * (pi1f * j1).sqrt();
    if !(b > 0.0) {
        return None;
    }
    let f = -(a + (1.0 + 2.0 * (-a - b).exp()).ln()) / b;
    (-1.0..=1.0).contains(&f).then(|| 0.5 * f.acos())
}

/// Half-width of the activity curve `S(λ V(x))` of a single-mode state.
///
/// The voltage already contains the threshold, so the lemma is applied with
/// a zero threshold offset.
pub fn state_halfwidth(state: &CortexState, spec: &ModelSpec) -> Option<f64> {
    if spec.sigmoid_kind != SigmoidKind::Standard {
        return None;
    }
    tuning_halfwidth(state.v0, state.z[0].norm_sqr(), spec.gain, 0.0, spec.magnitude(1))
}

/// Reference half-width of `S(a + b cos 2x)` by bisection on `[0, π/2]`.
pub fn halfwidth_by_bisection(a: f64, b: f64) -> Option<f64> {
    let target = 0.5 * logistic(a + b);
    let f = |x: f64| logistic(a + b * (2.0 * x).cos()) - target;
    let (mut lo, mut hi) = (0.0, 0.5 * PI);
    if f(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if f(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimulus::make_lgn_stimulus;

    fn reference() -> (ModelSpec, Stimulus) {
        let spec = ModelSpec::new(-1, vec![1.5]).with_gain(15.0);
        let stim = make_lgn_stimulus(0.1, 0.0, 0.01, &spec).unwrap();
        (spec, stim)
    }

    #[test]
    fn phase_is_conserved_without_contrast() {
        let (spec, stim) = reference();
        let stim = stim.with_contrast(0.0);
        let d = polar_rhs(
            &PolarState {
                v0: -0.1,
                rho: 0.3,
                phi: 0.4,
            },
            &stim,
            &spec,
        )
        .unwrap();
        assert_eq!(d.phi, 0.0);
    }

    #[test]
    fn degenerate_polar() {
        let (spec, stim) = reference();
        let p = PolarState {
            v0: 0.0,
            rho: 0.0,
            phi: 0.0,
        };
        assert!(matches!(polar_rhs(&p, &stim, &spec), Err(RingError::DegeneratePolar)));
    }

    #[test]
    fn polar_matches_cartesian_field() {
        let (spec, stim) = reference();
        let model = RingModel::new(spec.clone()).unwrap();
        let p = PolarState {
            v0: -0.15,
            rho: 0.2,
            phi: 0.3,
        };
        let d = polar_rhs(&p, &stim, &spec).unwrap();
        let s = p.to_state();
        let c = model.rhs(&s, &stim);
        // ż = (ρ̇ + 2iρφ̇) e^{2iφ}
        let z = num_complex::Complex64::new(d.rho, 2.0 * p.rho * d.phi)
            * num_complex::Complex64::from_polar(1.0, 2.0 * p.phi);
        assert!((c.v0 - d.v0).abs() < 1e-13);
        assert!((c.z[0] - z).norm() < 1e-13);
    }

    #[test]
    fn analytic_polar_jacobian() {
        let (spec, stim) = reference();
        let sys = PolarSystem::new(&spec, &stim, Parity::Odd).unwrap();
        let p = Params::from_spec(&spec, 0.01);
        let u = DVector::from_vec(vec![-0.17, 0.12]);
        let a = sys.analytic_jacobian(&u, &p).unwrap();
        let f = sys.fd_jacobian(&u, &p);
        assert!((a - f).abs().max() < 1e-8);
    }

    #[test]
    fn pitchfork_bound_and_residual() {
        for (j1, theta, e0) in [(1.5, 0.0, -1.0), (3.0, 0.2, -1.0), (2.0, -0.3, 1.0), (6.0, 0.5, -1.0)] {
            if let Some((lam, v0)) = pitchfork_condition(j1, theta, e0) {
                assert!(lam * j1 >= 8.0 - 1e-12);
                let u = logistic(lam * v0);
                assert!((v0 - (e0 * u - theta)).abs() < 1e-10);
                assert!((lam * u * (1.0 - u) * j1 / 2.0 - 1.0).abs() < 1e-10);
            }
        }
        assert!(pitchfork_within(1.5, 0.0, -1.0, 5.0).is_none());
    }

    #[test]
    fn halfwidth_examples() {
        let f: f64 = -(1.0 + 2.0 * (-1.0f64).exp()).ln();
        assert!((f + 0.5515).abs() < 1e-4);
        let w = tuning_halfwidth(0.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        assert!((w - 0.5 * f.acos()).abs() < 1e-15);
        assert!((w - halfwidth_by_bisection(0.0, 1.0).unwrap()).abs() < 1e-12);
        let w = tuning_halfwidth(0.0, 1.0, 1e8, 0.0, 1.0).unwrap();
        assert!((w - PI / 4.0).abs() < 1e-6);
        assert!(tuning_halfwidth(5.0, 1e-6, 1.0, 0.0, 1.0).is_none());
    }

    #[test]
    fn empty_grids() {
        assert!(threshold_boundary(-1.0, &[], &[1.0], 30.0).is_err());
        assert!(threshold_boundary(-1.0, &[0.0], &[], 30.0).is_err());
    }
}
