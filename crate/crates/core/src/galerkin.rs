//! Fourier–Galerkin reduction of the ring equation.
//!
//! For `V(y) = v₀ + Σ_p √|J_p| Re(z_p e^{-2ipy})` the reduced vector field is
//!
//! ```text
//! τ v̇₀  = -v₀ + ε₀ M₀ + c + ε I₀
//! τ ż_k = -z_k + ε_k √|J_k| M_k + ε I_k
//! M_k   = (1/π) ∫ g(λ V(y)) e^{2iky} dy
//! ```
//!
//! where `g` and the constant `c` depend on the sigmoid variant
//! (see [`ModelSpec::shape`] and [`ModelSpec::v0_offset`]).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, RingError};
use crate::model::{logistic, logistic_slope, ModelSpec, SigmoidKind};
use crate::orbit::chebyshev::ChebyshevSeries;
use crate::quadrature::{Quadrature, DEFAULT_GAUSS_ORDER};
use crate::state::CortexState;
use crate::stimulus::Stimulus;

/// Nonlinearity used inside the Fourier integrals.
#[derive(Clone, Debug)]
pub enum Nonlinearity {
    /// The sigmoid shape selected by the model spec.
    Sigmoid,
    /// A polynomial replacing that shape (orbit-space comparisons).
    Polynomial(Arc<ChebyshevSeries>),
}

/// Quadrature nodes with cached trigonometric tables.
#[derive(Debug)]
struct Kernel {
    quad: Quadrature,
    n_modes: usize,
    /// `cos(2k yᵢ)`, node-major, `k = 1..=N`.
    cos: Vec<f64>,
    /// `sin(2k yᵢ)`, exactly odd across mirror pairs and zero on self-mirrored nodes.
    sin: Vec<f64>,
}

impl Kernel {
    fn new(quad: Quadrature, n_modes: usize) -> Self {
        let m = quad.len();
        let mut cos = vec![0.0; m * n_modes];
        let mut sin = vec![0.0; m * n_modes];
        for (i, &y) in quad.nodes().iter().enumerate() {
            for k in 0..n_modes {
                let (s, c) = (2.0 * (k + 1) as f64 * y).sin_cos();
                cos[i * n_modes + k] = c;
                sin[i * n_modes + k] = s;
            }
        }
        for &(i, j) in quad.pairs() {
            for k in 0..n_modes {
                cos[j * n_modes + k] = cos[i * n_modes + k];
                sin[j * n_modes + k] = -sin[i * n_modes + k];
            }
        }
        for &i in quad.singles() {
            for k in 0..n_modes {
                sin[i * n_modes + k] = 0.0;
            }
        }
        Self {
            quad,
            n_modes,
            cos,
            sin,
        }
    }
}

/// A model specification bound to a quadrature rule.
#[derive(Clone, Debug)]
pub struct RingModel {
    spec: ModelSpec,
    kernel: Arc<Kernel>,
    nonlinearity: Nonlinearity,
    amp: Vec<f64>,
}

/// The Fourier moments `M₀` (real) and `M_k`, `k = 1..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub m0: f64,
    pub mk: Vec<Complex64>,
}

impl RingModel {
    /// Binds `spec` to the default Gauss–Legendre rule.
    pub fn new(spec: ModelSpec) -> Result<Self> {
        Self::with_quadrature(spec, Quadrature::gauss_legendre(DEFAULT_GAUSS_ORDER)?)
    }

    pub fn with_quadrature(spec: ModelSpec, quad: Quadrature) -> Result<Self> {
        spec.validate()?;
        let amp = (1..=spec.n_modes).map(|k| spec.sqrt_magnitude(k)).collect();
        let kernel = Arc::new(Kernel::new(quad, spec.n_modes));
        Ok(Self {
            spec,
            kernel,
            nonlinearity: Nonlinearity::Sigmoid,
            amp,
        })
    }

    /// Replaces the sigmoid shape by a polynomial.
    pub fn with_nonlinearity(mut self, nl: Nonlinearity) -> Self {
        self.nonlinearity = nl;
        self
    }

    /// Same quadrature, different parameters (mode count must match).
    pub fn with_spec(&self, spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        if spec.n_modes != self.kernel.n_modes {
            return Err(RingError::InvalidParameter(format!(
                "mode count changed from {} to {}",
                self.kernel.n_modes, spec.n_modes
            )));
        }
        let amp = (1..=spec.n_modes).map(|k| spec.sqrt_magnitude(k)).collect();
        Ok(Self {
            spec,
            kernel: Arc::clone(&self.kernel),
            nonlinearity: self.nonlinearity.clone(),
            amp,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.kernel.quad
    }

    pub fn n_modes(&self) -> usize {
        self.spec.n_modes
    }

    /// Real dimension `2N + 1`.
    pub fn dim(&self) -> usize {
        2 * self.spec.n_modes + 1
    }

    #[inline]
    fn g(&self, x: f64) -> f64 {
        match &self.nonlinearity {
            Nonlinearity::Sigmoid => self.spec.shape(x),
            Nonlinearity::Polynomial(p) => p.value(x),
        }
    }

    #[inline]
    fn g_slope(&self, x: f64) -> f64 {
        match &self.nonlinearity {
            Nonlinearity::Sigmoid => logistic_slope(x),
            Nonlinearity::Polynomial(p) => p.slope(x),
        }
    }

    /// Even and odd parts `(E, O)` of `V - v₀` at node `i`.
    #[inline]
    fn parts(&self, state: &CortexState, i: usize) -> (f64, f64) {
        let n = self.kernel.n_modes;
        let cos = &self.kernel.cos[i * n..(i + 1) * n];
        let sin = &self.kernel.sin[i * n..(i + 1) * n];
        let mut e = 0.0;
        let mut o = 0.0;
        for k in 0..n {
            e += self.amp[k] * state.z[k].re * cos[k];
            o += self.amp[k] * state.z[k].im * sin[k];
        }
        (e, o)
    }

    pub fn moments(&self, state: &CortexState) -> Moments {
        let n = self.kernel.n_modes;
        let lam = self.spec.gain;
        let w = self.kernel.quad.weights();
        let mut m0 = 0.0;
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for &(i, _) in self.kernel.quad.pairs() {
            let (e, o) = self.parts(state, i);
            let gp = self.g(lam * (state.v0 + e + o));
            let gm = self.g(lam * (state.v0 + e - o));
            let sum = w[i] * (gp + gm);
            let diff = w[i] * (gp - gm);
            m0 += sum;
            let cos = &self.kernel.cos[i * n..(i + 1) * n];
            let sin = &self.kernel.sin[i * n..(i + 1) * n];
            for k in 0..n {
                re[k] += cos[k] * sum;
                im[k] += sin[k] * diff;
            }
        }
        for &i in self.kernel.quad.singles() {
            let (e, _) = self.parts(state, i);
            let gv = w[i] * self.g(lam * (state.v0 + e));
            m0 += gv;
            let cos = &self.kernel.cos[i * n..(i + 1) * n];
            for k in 0..n {
                re[k] += cos[k] * gv;
            }
        }
        Moments {
            m0,
            mk: re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect(),
        }
    }

    /// Vector field of the reduced system.
    pub fn rhs(&self, state: &CortexState, stim: &Stimulus) -> CortexState {
        let m = self.moments(state);
        let tau = self.spec.time_constant;
        let eps = stim.contrast;
        let v0 = (-state.v0 + self.spec.eps0() * m.m0 + self.spec.v0_offset() + eps * stim.i0) / tau;
        let z = (0..self.n_modes())
            .map(|k| {
                let gain = self.spec.sign(k + 1) * self.amp[k];
                (-state.z[k] + m.mk[k] * gain + stim.i_k[k] * eps) / tau
            })
            .collect();
        CortexState { v0, z }
    }

    /// [`RingModel::rhs`] in real coordinates.
    pub fn rhs_real(&self, u: &[f64], stim: &Stimulus) -> Vec<f64> {
        self.rhs(&CortexState::from_real(u), stim).to_real()
    }

    /// Analytic Jacobian of [`RingModel::rhs_real`] by quadrature of `g'`.
    pub fn jacobian(&self, state: &CortexState) -> DMatrix<f64> {
        let n = self.kernel.n_modes;
        let dim = 2 * n + 1;
        let lam = self.spec.gain;
        let tau = self.spec.time_constant;
        let w = self.kernel.quad.weights();
        // dM[r][c]: r = 0 for M₀, then (Re M_k, Im M_k); c over real coordinates.
        let mut dm = DMatrix::<f64>::zeros(dim, dim);
        let mut phi = vec![0.0; dim];
        let mut rows = vec![0.0; dim];
        for i in 0..self.kernel.quad.len() {
            let (e, o) = self.parts(state, i);
            let d = w[i] * lam * self.g_slope(lam * (state.v0 + e + o));
            let cos = &self.kernel.cos[i * n..(i + 1) * n];
            let sin = &self.kernel.sin[i * n..(i + 1) * n];
            phi[0] = 1.0;
            rows[0] = 1.0;
            for k in 0..n {
                phi[2 * k + 1] = self.amp[k] * cos[k];
                phi[2 * k + 2] = self.amp[k] * sin[k];
                rows[2 * k + 1] = cos[k];
                rows[2 * k + 2] = sin[k];
            }
            for r in 0..dim {
                let dr = d * rows[r];
                for c in 0..dim {
                    dm[(r, c)] += dr * phi[c];
                }
            }
        }
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for c in 0..dim {
            jac[(0, c)] = self.spec.eps0() * dm[(0, c)];
            for k in 0..n {
                let gain = self.spec.sign(k + 1) * self.amp[k];
                jac[(2 * k + 1, c)] = gain * dm[(2 * k + 1, c)];
                jac[(2 * k + 2, c)] = gain * dm[(2 * k + 2, c)];
            }
        }
        for r in 0..dim {
            jac[(r, r)] -= 1.0;
        }
        jac / tau
    }

    /// Jacobian restricted to the reflection-invariant subspace `Im z = 0`.
    pub fn jacobian_reflection(&self, state: &CortexState) -> DMatrix<f64> {
        let full = self.jacobian(state);
        let idx: Vec<usize> = std::iter::once(0)
            .chain((0..self.n_modes()).map(|k| 2 * k + 1))
            .collect();
        DMatrix::from_fn(idx.len(), idx.len(), |r, c| full[(idx[r], idx[c])])
    }

    /// Residual in the reflection chart `(v₀, Re z₁, …)`.
    pub fn rhs_reflection(&self, u: &[f64], stim: &Stimulus) -> Vec<f64> {
        self.rhs(&CortexState::from_reflection_chart(u), stim)
            .to_reflection_chart()
    }

    /// Reduced-field evaluation in `nalgebra` form.
    pub fn rhs_vector(&self, u: &DVector<f64>, stim: &Stimulus) -> DVector<f64> {
        DVector::from_vec(self.rhs_real(u.as_slice(), stim))
    }
}

/// Free-function form of [`RingModel::rhs`].
pub fn galerkin_rhs(state: &CortexState, stim: &Stimulus, model: &RingModel) -> CortexState {
    model.rhs(state, stim)
}

/// Eigenvalues of the linearisation at the zero state of the centered model:
/// `(-1 + λ ε₀/4, [-1 + λ J_k/8; k])`, each scaled by `1/τ`.
pub fn centered_zero_spectrum(spec: &ModelSpec) -> (f64, Vec<f64>) {
    let s0 = 0.25;
    let tau = spec.time_constant;
    let mode0 = (-1.0 + spec.gain * s0 * spec.eps0()) / tau;
    let modes = spec
        .j_weights
        .iter()
        .map(|&j| (-1.0 + spec.gain * s0 * j / 2.0) / tau)
        .collect();
    (mode0, modes)
}

/// True shape value for a spec, ignoring any polynomial substitution.
pub fn sigmoid_shape(kind: SigmoidKind, x: f64) -> f64 {
    match kind {
        SigmoidKind::Standard => logistic(x),
        SigmoidKind::Centered | SigmoidKind::Homotopy => logistic(x) - 0.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimulus::make_lgn_stimulus;

    fn reference() -> ModelSpec {
        ModelSpec::new(-1, vec![1.5]).with_gain(15.0)
    }

    #[test]
    fn zero_state_example() {
        let m = RingModel::new(ModelSpec::new(-1, vec![1.5])).unwrap();
        let d = m.rhs(&CortexState::zeros(1), &Stimulus::none(1));
        assert!((d.v0 + 0.5).abs() < 1e-15);
        assert!(d.z[0].norm() < 1e-14);
    }

    #[test]
    fn reflection_subspace_is_exactly_invariant() {
        let spec = reference();
        let m = RingModel::new(spec.clone()).unwrap();
        let stim = make_lgn_stimulus(0.1, 0.0, 0.01, &spec).unwrap();
        let s = CortexState::new(-0.2, vec![Complex64::new(0.37, 0.0)]);
        assert_eq!(m.rhs(&s, &stim).z[0].im, 0.0);

        let m = RingModel::with_quadrature(spec.clone(), Quadrature::periodic(64)).unwrap();
        assert_eq!(m.rhs(&s, &stim).z[0].im, 0.0);
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let spec = ModelSpec::new(-1, vec![9.0, -6.66]).with_gain(1.1).with_threshold(0.2);
        let m = RingModel::new(spec.clone()).unwrap();
        let stim = make_lgn_stimulus(0.05, 0.2, 0.3, &spec).unwrap();
        let s = CortexState::new(-0.1, vec![Complex64::new(0.2, -0.1), Complex64::new(-0.05, 0.15)]);
        let jac = m.jacobian(&s);
        let u = s.to_real();
        let h = 1e-6;
        for c in 0..u.len() {
            let mut up = u.clone();
            let mut um = u.clone();
            up[c] += h;
            um[c] -= h;
            let fp = m.rhs_real(&up, &stim);
            let fm = m.rhs_real(&um, &stim);
            for r in 0..u.len() {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                assert!((fd - jac[(r, c)]).abs() < 1e-8, "({r},{c}) {fd} vs {}", jac[(r, c)]);
            }
        }
    }

    #[test]
    fn gauss_order_64_is_converged() {
        let spec = reference();
        let lo = RingModel::new(spec.clone()).unwrap();
        let hi = RingModel::with_quadrature(spec.clone(), Quadrature::gauss_legendre(200).unwrap()).unwrap();
        let s = CortexState::new(-0.18, vec![Complex64::new(0.15, 0.1)]);
        let stim = make_lgn_stimulus(0.1, 0.0, 0.01, &spec).unwrap();
        let a = lo.rhs(&s, &stim);
        let b = hi.rhs(&s, &stim);
        assert!(a.distance(&b) < 1e-12);
    }

    #[test]
    fn centered_zero_spectrum_matches_jacobian() {
        let spec = ModelSpec::new(-1, vec![9.0, 6.66])
            .with_gain(0.7)
            .with_kind(SigmoidKind::Centered);
        let m = RingModel::new(spec.clone()).unwrap();
        let jac = m.jacobian(&CortexState::zeros(2));
        let (m0, mk) = centered_zero_spectrum(&spec);
        assert!((jac[(0, 0)] - m0).abs() < 1e-13);
        for k in 0..2 {
            assert!((jac[(2 * k + 1, 2 * k + 1)] - mk[k]).abs() < 1e-13);
            assert!((jac[(2 * k + 2, 2 * k + 2)] - mk[k]).abs() < 1e-13);
        }
        let off: f64 = (0..5)
            .flat_map(|r| (0..5).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .map(|(r, c)| jac[(r, c)].abs())
            .sum();
        assert!(off < 1e-13);
    }
}
