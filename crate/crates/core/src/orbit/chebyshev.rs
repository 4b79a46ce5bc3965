//! Chebyshev approximation of the sigmoid on a symmetric interval.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RingError};
use crate::galerkin::sigmoid_shape;
use crate::model::SigmoidKind;

/// Number of points on which the sup error is certified.
pub const CERTIFY_POINTS: usize = 10_000;

/// Default degree cap for [`chebyshev_fit`].
pub const DEFAULT_DEGREE_CAP: usize = 80;

/// `P(u) = Σ cᵢ Tᵢ(u / α)` on `[-α, α]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevSeries {
    pub alpha: f64,
    pub coeffs: Vec<f64>,
    /// Sup error measured on the certification grid.
    pub fit_error: f64,
    #[serde(skip)]
    deriv: Vec<f64>,
}

impl ChebyshevSeries {
    pub fn new(alpha: f64, coeffs: Vec<f64>, fit_error: f64) -> Self {
        let deriv = derivative_coeffs(&coeffs);
        Self {
            alpha,
            coeffs,
            fit_error,
            deriv,
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn value(&self, u: f64) -> f64 {
        clenshaw(&self.coeffs, u / self.alpha)
    }

    pub fn slope(&self, u: f64) -> f64 {
        if self.deriv.len() + 1 != self.coeffs.len() && self.coeffs.len() > 1 {
            // deserialised series: derivative table not cached
            return clenshaw(&derivative_coeffs(&self.coeffs), u / self.alpha) / self.alpha;
        }
        clenshaw(&self.deriv, u / self.alpha) / self.alpha
    }

    /// Monomial coefficients `pₙ` with `P(u) = Σ pₙ uⁿ`.
    pub fn power_coeffs(&self) -> Vec<f64> {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        let mut t_prev = vec![0.0; n + 1];
        let mut t_cur = vec![0.0; n + 1];
        t_prev[0] = 1.0;
        if n > 0 {
            out[0] += self.coeffs[0];
        }
        if n > 1 {
            t_cur[1] = 1.0;
            out[1] += self.coeffs[1];
        }
        for i in 2..n {
            let mut next = vec![0.0; n + 1];
            for j in 0..n {
                next[j + 1] += 2.0 * t_cur[j];
                next[j] -= t_prev[j];
            }
            for j in 0..=i {
                out[j] += self.coeffs[i] * next[j];
            }
            t_prev = t_cur;
            t_cur = next;
        }
        let mut scale = 1.0;
        for p in out.iter_mut() {
            *p *= scale;
            scale /= self.alpha;
        }
        out
    }
}

fn clenshaw(c: &[f64], s: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * s * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    match c.first() {
        Some(&c0) => s * b1 - b2 + c0,
        None => 0.0,
    }
}

fn derivative_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for k in (1..n).rev() {
        d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

/// Chebyshev coefficients of `f(α s)` from interpolation at `m` Chebyshev points.
fn interpolation_coeffs<F: Fn(f64) -> f64>(f: &F, alpha: f64, m: usize) -> Vec<f64> {
    let vals: Vec<f64> = (0..m)
        .map(|j| {
            let th = PI * (j as f64 + 0.5) / m as f64;
            f(alpha * th.cos())
        })
        .collect();
    (0..m)
        .map(|k| {
            let s: f64 = vals
                .iter()
                .enumerate()
                .map(|(j, v)| v * (PI * k as f64 * (j as f64 + 0.5) / m as f64).cos())
                .sum();
            let norm = if k == 0 { 1.0 } else { 2.0 };
            norm * s / m as f64
        })
        .collect()
}

fn sup_error<F: Fn(f64) -> f64>(f: &F, alpha: f64, coeffs: &[f64]) -> f64 {
    (0..CERTIFY_POINTS)
        .map(|j| {
            let s = -1.0 + 2.0 * j as f64 / (CERTIFY_POINTS - 1) as f64;
            (f(alpha * s) - clenshaw(coeffs, s)).abs()
        })
        .fold(0.0, f64::max)
}

/// Smallest-degree Chebyshev truncation of `f` on `[-α, α]` whose sup error
/// on a 10⁴-point grid is at most `max_error`.
pub fn chebyshev_fit_fn<F: Fn(f64) -> f64>(
    f: F,
    alpha: f64,
    max_error: f64,
    degree_cap: usize,
) -> Result<ChebyshevSeries> {
    if !(alpha > 0.0) || !(max_error > 0.0) {
        return Err(RingError::InvalidParameter(
            "alpha and max_error must be positive".into(),
        ));
    }
    let m = (4 * degree_cap).max(256);
    let full = interpolation_coeffs(&f, alpha, m);
    let mut best_err = f64::INFINITY;
    for d in 0..=degree_cap {
        let mut c = full[..=d].to_vec();
        for x in c.iter_mut() {
            if x.abs() < 1e-15 {
                *x = 0.0;
            }
        }
        let err = sup_error(&f, alpha, &c);
        best_err = best_err.min(err);
        if err <= max_error {
            return Ok(ChebyshevSeries::new(alpha, c, err));
        }
    }
    Err(RingError::DegreeCap {
        cap: degree_cap,
        error: best_err,
    })
}

/// Fit of the Fourier-integral shape of `kind` (`S` or `S₀`).
pub fn chebyshev_fit(kind: SigmoidKind, alpha: f64, max_error: f64) -> Result<ChebyshevSeries> {
    chebyshev_fit_fn(|u| sigmoid_shape(kind, u), alpha, max_error, DEFAULT_DEGREE_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_degree() {
        let p = chebyshev_fit(SigmoidKind::Standard, 14.0, 0.01).unwrap();
        assert!((15..=25).contains(&p.degree()), "degree {}", p.degree());
        assert!(p.fit_error <= 0.01);
    }

    #[test]
    fn identity_is_degree_one() {
        let p = chebyshev_fit_fn(|u| u, 3.0, 1e-12, 10).unwrap();
        assert_eq!(p.degree(), 1);
        assert!((p.value(2.0) - 2.0).abs() < 1e-14);
        assert!((p.slope(-1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degree_cap_error() {
        let r = chebyshev_fit_fn(|u: f64| (5.0 * u).sin(), 10.0, 1e-10, 5);
        assert!(matches!(r, Err(RingError::DegreeCap { cap: 5, .. })));
    }

    #[test]
    fn power_basis_agrees_with_clenshaw() {
        let p = chebyshev_fit(SigmoidKind::Standard, 14.0, 0.01).unwrap();
        let pc = p.power_coeffs();
        for u in [-13.0f64, -5.5, 0.0, 0.7, 9.0, 14.0] {
            let direct: f64 = pc.iter().enumerate().map(|(n, c)| c * u.powi(n as i32)).sum();
            assert!((direct - p.value(u)).abs() < 1e-10, "{u}: {direct} vs {}", p.value(u));
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        let p = chebyshev_fit(SigmoidKind::Centered, 14.0, 1e-4).unwrap();
        for u in [-10.0, -1.0, 0.0, 3.0] {
            let fd = (p.value(u + 1e-5) - p.value(u - 1e-5)) / 2e-5;
            assert!((fd - p.slope(u)).abs() < 1e-7);
        }
    }

    #[test]
    fn json_roundtrip_keeps_slope() {
        let p = chebyshev_fit(SigmoidKind::Standard, 14.0, 0.01).unwrap();
        let q: ChebyshevSeries = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert!((p.slope(1.3) - q.slope(1.3)).abs() < 1e-14);
    }
}
