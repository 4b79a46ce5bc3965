//! Damped Newton iteration and small dense linear-algebra helpers.

use nalgebra::{DMatrix, DVector, Dyn, Schur, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RingError};

/// Relative step for central finite differences: `h = FD_STEP (1 + ‖u‖)`.
pub const FD_STEP: f64 = 1e-6;

/// Default margin above which an eigenvalue counts as unstable.
pub const STABILITY_MARGIN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
    /// Jacobians with a larger condition estimate are reported as singular.
    pub max_condition: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 50,
            max_halvings: 30,
            max_condition: 1e13,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub solution: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub fn sup(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// How Jacobians are formed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    /// Central differences with step `h (1 + ‖u‖)`.
    FiniteDifference { h: f64 },
    /// Closed form where the system provides one.
    Analytic,
}

/// Central-difference Jacobian with step `FD_STEP (1 + ‖u‖)`.
pub fn fd_jacobian<F>(f: &F, u: &DVector<f64>) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + ?Sized,
{
    fd_jacobian_step(f, u, FD_STEP)
}

/// Central-difference Jacobian with step `rel (1 + ‖u‖)`.
pub fn fd_jacobian_step<F>(f: &F, u: &DVector<f64>, rel: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + ?Sized,
{
    let h = rel * (1.0 + u.norm());
    let n = u.len();
    let mut cols = Vec::with_capacity(n);
    for c in 0..n {
        let mut up = u.clone();
        let mut um = u.clone();
        up[c] += h;
        um[c] -= h;
        cols.push((f(&up) - f(&um)) / (2.0 * h));
    }
    DMatrix::from_columns(&cols)
}

const MAX_SVD_ITERS: usize = 10_000;

fn svd(m: &DMatrix<f64>, vectors: bool) -> Option<SVD<f64, Dyn, Dyn>> {
    if !m.iter().all(|v| v.is_finite()) {
        return None;
    }
    SVD::try_new(m.clone(), false, vectors, f64::EPSILON, MAX_SVD_ITERS)
}

/// Singular values; NaN when the matrix is not finite or the iteration stalls.
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    svd(m, false).map_or_else(
        || DVector::from_element(m.nrows().min(m.ncols()), f64::NAN),
        |s| s.singular_values,
    )
}

/// `σ_max / σ_min` (infinite for an exactly singular matrix).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    if s.iter().any(|v| v.is_nan()) {
        return f64::NAN;
    }
    let max = s.max();
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Unit right singular vector for the smallest singular value of a square matrix.
pub fn null_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let Some(svd) = svd(m, true) else {
        return DVector::from_element(m.ncols(), f64::NAN);
    };
    let v_t = svd.v_t.expect("requested V^T");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    v_t.row(imin).transpose()
}

/// Null direction of an `n × (n+1)` matrix.
pub fn kernel_direction(a: &DMatrix<f64>) -> DVector<f64> {
    let ata = a.transpose() * a;
    null_vector(&ata)
}

/// Eigenvalues via a real Schur form. The QR iteration is capped; when it
/// stalls (it can, for blocks whose diagonal cancels) the matrix is
/// shifted by a multiple of the identity and the shift removed afterwards.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    let n = m.nrows();
    let scale = m.amax().max(1.0);
    for shift in [0.0, 0.5, -0.5, 1.5] {
        let a = m + DMatrix::identity(n, n) * (shift * scale);
        if let Some(schur) = Schur::try_new(a, f64::EPSILON, 10_000) {
            return schur
                .complex_eigenvalues()
                .iter()
                .map(|z| Complex64::new(z.re - shift * scale, z.im))
                .collect();
        }
    }
    vec![Complex64::new(f64::NAN, 0.0); n]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityInfo {
    pub n_unstable: usize,
    pub leading_real: f64,
    pub eigenvalues: Vec<Complex64>,
}

impl StabilityInfo {
    pub fn stable(&self) -> bool {
        self.n_unstable == 0
    }
}

/// Counts eigenvalues with real part above `margin`.
pub fn spectrum_stability(jac: &DMatrix<f64>, margin: f64) -> StabilityInfo {
    let mut eig = eigenvalues(jac);
    eig.sort_by(|a, b| b.re.total_cmp(&a.re));
    StabilityInfo {
        n_unstable: eig.iter().filter(|z| z.re > margin).count(),
        leading_real: eig.first().map_or(f64::NEG_INFINITY, |z| z.re),
        eigenvalues: eig,
    }
}

/// Damped Newton with a finite-difference Jacobian.
pub fn newton_solve<F>(f: F, guess: &DVector<f64>, cfg: &NewtonConfig) -> Result<NewtonOutcome>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    newton_solve_with(&f, &|u: &DVector<f64>| fd_jacobian(&f, u), guess, cfg)
}

/// Damped Newton with a caller-supplied Jacobian.
pub fn newton_solve_with<F, J>(f: &F, jac: &J, guess: &DVector<f64>, cfg: &NewtonConfig) -> Result<NewtonOutcome>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + ?Sized,
    J: Fn(&DVector<f64>) -> DMatrix<f64> + ?Sized,
{
    let mut u = guess.clone();
    let mut r = f(&u);
    let mut rn = sup(&r);
    if !rn.is_finite() {
        return Err(RingError::NewtonDiverged {
            iterations: 0,
            residual: rn,
        });
    }
    for it in 0..cfg.max_iters {
        if rn <= cfg.tol {
            return Ok(NewtonOutcome {
                solution: u,
                iterations: it,
                residual: rn,
            });
        }
        let j = jac(&u);
        let cond = condition_number(&j);
        if !(cond <= cfg.max_condition) {
            return Err(RingError::SingularJacobian { condition: cond });
        }
        let step = j
            .lu()
            .solve(&(-&r))
            .ok_or(RingError::SingularJacobian { condition: cond })?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let cand = &u + &step * t;
            let rc = f(&cand);
            let rcn = sup(&rc);
            if rcn.is_finite() && rcn < rn {
                accepted = Some((cand, rc, rcn));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((c, rc, rcn)) => {
                u = c;
                r = rc;
                rn = rcn;
            }
            None => {
                return Err(RingError::NewtonDiverged {
                    iterations: it + 1,
                    residual: rn,
                })
            }
        }
    }
    if rn <= cfg.tol {
        Ok(NewtonOutcome {
            solution: u,
            iterations: cfg.max_iters,
            residual: rn,
        })
    } else {
        Err(RingError::NewtonDiverged {
            iterations: cfg.max_iters,
            residual: rn,
        })
    }
}
