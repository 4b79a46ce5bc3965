//! Invariant polynomials of the N = 2 Galerkin system.
//!
//! For a polynomial nonlinearity `P`, the Fourier moments of `P(λV)` are
//! polynomials in `(v₀, z₁, z̄₁, z₂, z̄₂)`. Writing `w = e^{-2iy}`,
//!
//! ```text
//! λV = λv₀ + (λ√J₁/2)(z₁w + z̄₁w̄) + (λ√|J₂|/2)(z₂w² + z̄₂w̄²)
//! ```
//!
//! so every monomial `v₀ᵉ z₁ᵖ z̄₁^q z₂ʳ z̄₂ˢ` carries the frequency
//! `p - q + 2r - 2s`. The moment `M_k` collects frequency `k`. Removing
//! conjugate pairs leaves a power of `W = z₁² z̄₂` (or its conjugate) times,
//! for `k = 1`, `z₁` or `z̄₁z₂`, and for `k = 2`, `z₂` or `z₁²`. These are
//! rewritten with `Pₜ = Re Wᵗ`, `Uₜ = Im Wᵗ / Im W`, both obeying
//! `Xₜ = 2π₃ Xₜ₋₁ - π₁²π₂ Xₜ₋₂`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RingError};
use crate::model::ModelSpec;
use crate::orbit::chebyshev::ChebyshevSeries;

/// Exponents of `(λ, v₀, π₁, π₂, π₃)`.
pub type Exponents = [u32; 5];

/// Sparse polynomial in `(λ, v₀, π₁, π₂, π₃)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantPoly {
    pub terms: Vec<Term>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub lambda: u32,
    pub v0: u32,
    /// Exponents `(m, n, l)` of `(π₁, π₂, π₃)`.
    pub pi: [u32; 3],
    pub coef: f64,
}

impl InvariantPoly {
    fn from_map(map: BTreeMap<Exponents, f64>) -> Self {
        Self {
            terms: map
                .into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|(e, coef)| Term {
                    lambda: e[0],
                    v0: e[1],
                    pi: [e[2], e[3], e[4]],
                    coef,
                })
                .collect(),
        }
    }

    pub fn max_exponents(&self) -> Exponents {
        let mut m = [0u32; 5];
        for t in &self.terms {
            let e = [t.lambda, t.v0, t.pi[0], t.pi[1], t.pi[2]];
            for i in 0..5 {
                m[i] = m[i].max(e[i]);
            }
        }
        m
    }

    pub fn eval(&self, lambda: f64, v0: f64, pi: [f64; 3]) -> f64 {
        let tables = PowerTables::new(self.max_exponents(), [lambda, v0, pi[0], pi[1], pi[2]]);
        self.eval_with(&tables)
    }

    fn eval_with(&self, t: &PowerTables) -> f64 {
        self.terms
            .iter()
            .map(|m| {
                m.coef * t.pow(0, m.lambda) * t.pow(1, m.v0) * t.pow(2, m.pi[0]) * t.pow(3, m.pi[1]) * t.pow(4, m.pi[2])
            })
            .sum()
    }

    /// Adds a constant term.
    fn shifted(mut self, c: f64) -> Self {
        if let Some(t) = self
            .terms
            .iter_mut()
            .find(|t| t.lambda == 0 && t.v0 == 0 && t.pi == [0, 0, 0])
        {
            t.coef += c;
        } else {
            self.terms.push(Term {
                lambda: 0,
                v0: 0,
                pi: [0, 0, 0],
                coef: c,
            });
        }
        self
    }

    fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.coef *= s;
        }
        self
    }
}

struct PowerTables {
    pows: [Vec<f64>; 5],
}

impl PowerTables {
    fn new(max: Exponents, x: [f64; 5]) -> Self {
        let mk = |m: u32, v: f64| {
            let mut p = Vec::with_capacity(m as usize + 1);
            let mut acc = 1.0;
            for _ in 0..=m {
                p.push(acc);
                acc *= v;
            }
            p
        };
        Self {
            pows: [
                mk(max[0], x[0]),
                mk(max[1], x[1]),
                mk(max[2], x[2]),
                mk(max[3], x[3]),
                mk(max[4], x[4]),
            ],
        }
    }

    #[inline]
    fn pow(&self, i: usize, e: u32) -> f64 {
        self.pows[i][e as usize]
    }
}

/// The coefficient functions of the orbit-space reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantSet {
    /// `B̃₀ = ε₀ M₀`.
    pub b0: InvariantPoly,
    pub a: InvariantPoly,
    pub b: InvariantPoly,
    pub c: InvariantPoly,
    pub d: InvariantPoly,
    pub degree: usize,
    pub alpha: f64,
    pub fit_error: f64,
}

/// Values of the coefficient functions at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantValues {
    pub b0: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl InvariantSet {
    pub fn eval(&self, lambda: f64, v0: f64, pi: [f64; 3]) -> InvariantValues {
        let mut max = [0u32; 5];
        for p in [&self.b0, &self.a, &self.b, &self.c, &self.d] {
            let m = p.max_exponents();
            for i in 0..5 {
                max[i] = max[i].max(m[i]);
            }
        }
        let t = PowerTables::new(max, [lambda, v0, pi[0], pi[1], pi[2]]);
        InvariantValues {
            b0: self.b0.eval_with(&t),
            a: self.a.eval_with(&t),
            b: self.b.eval_with(&t),
            c: self.c.eval_with(&t),
            d: self.d.eval_with(&t),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

type Poly3 = BTreeMap<[u32; 3], f64>;

fn poly_mul_mono(p: &Poly3, e: [u32; 3], c: f64) -> Poly3 {
    p.iter()
        .map(|(k, v)| ([k[0] + e[0], k[1] + e[1], k[2] + e[2]], v * c))
        .collect()
}

fn poly_add(a: &Poly3, b: &Poly3) -> Poly3 {
    let mut out = a.clone();
    for (k, v) in b {
        *out.entry(*k).or_insert(0.0) += v;
    }
    out
}

/// `Pₜ` and `Uₜ` for `t = 0..=n`.
fn recurrence_tables(n: usize) -> (Vec<Poly3>, Vec<Poly3>) {
    let step = |prev: &Poly3, prev2: &Poly3| {
        poly_add(
            &poly_mul_mono(prev, [0, 0, 1], 2.0),
            &poly_mul_mono(prev2, [2, 1, 0], -1.0),
        )
    };
    let one: Poly3 = [([0, 0, 0], 1.0)].into_iter().collect();
    let pi3: Poly3 = [([0, 0, 1], 1.0)].into_iter().collect();
    let mut p = vec![one.clone(), pi3];
    let mut u = vec![Poly3::new(), one];
    for t in 2..=n.max(1) + 1 {
        let np = step(&p[t - 1], &p[t - 2]);
        let nu = step(&u[t - 1], &u[t - 2]);
        p.push(np);
        u.push(nu);
    }
    (p, u)
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Reduces the moments of `P(λV)` to invariant polynomials for an N = 2
/// model.
pub fn reduce_invariants(poly: &ChebyshevSeries, spec: &ModelSpec) -> Result<InvariantSet> {
    reduce_power_series(&poly.power_coeffs(), spec, poly.degree(), poly.alpha, poly.fit_error)
}

/// As [`reduce_invariants`] for `P(u) = Σ cₙ uⁿ` given in the monomial basis.
pub fn reduce_power_series(
    coeffs: &[f64],
    spec: &ModelSpec,
    degree: usize,
    alpha: f64,
    fit_error: f64,
) -> Result<InvariantSet> {
    spec.validate()?;
    if spec.n_modes != 2 {
        return Err(RingError::InvalidParameter(format!(
            "orbit-space reduction needs n_modes = 2, got {}",
            spec.n_modes
        )));
    }
    if spec.magnitude(1) == 0.0 || spec.magnitude(2) == 0.0 {
        return Err(RingError::InvalidParameter(
            "orbit-space reduction needs |J1|, |J2| > 0".into(),
        ));
    }
    let h1 = 0.5 * spec.sqrt_magnitude(1);
    let h2 = 0.5 * spec.sqrt_magnitude(2);
    let nmax = coeffs.len().saturating_sub(1) as u32;
    let (pt, ut) = recurrence_tables(nmax as usize);
    let lf: Vec<f64> = (0..=nmax).map(ln_factorial).collect();
    let mut h1p = vec![1.0];
    let mut h2p = vec![1.0];
    for i in 1..=nmax as usize {
        h1p.push(h1p[i - 1] * h1);
        h2p.push(h2p[i - 1] * h2);
    }

    let mut m0: BTreeMap<Exponents, f64> = BTreeMap::new();
    let mut alpha_m: BTreeMap<Exponents, f64> = BTreeMap::new();
    let mut beta_m: BTreeMap<Exponents, f64> = BTreeMap::new();
    let mut gamma_m: BTreeMap<Exponents, f64> = BTreeMap::new();
    let mut delta_m: BTreeMap<Exponents, f64> = BTreeMap::new();

    let add = |map: &mut BTreeMap<Exponents, f64>, lam: u32, e: u32, pre: [u32; 3], poly: &Poly3, c: f64| {
        for (k, v) in poly {
            let key = [lam, e, pre[0] + k[0], pre[1] + k[1], pre[2] + k[2]];
            *map.entry(key).or_insert(0.0) += c * v;
        }
    };

    for n in 0..=nmax {
        let cn = coeffs[n as usize];
        if cn == 0.0 {
            continue;
        }
        for e in 0..=n {
            let rest = n - e;
            for p in 0..=rest {
                for q in 0..=rest - p {
                    for r in 0..=rest - p - q {
                        let s = rest - p - q - r;
                        let freq = p as i64 - q as i64 + 2 * (r as i64 - s as i64);
                        if !(0..=2).contains(&freq) {
                            continue;
                        }
                        let multinom = (lf[n as usize]
                            - lf[e as usize]
                            - lf[p as usize]
                            - lf[q as usize]
                            - lf[r as usize]
                            - lf[s as usize])
                            .exp();
                        let coef = cn * multinom * h1p[(p + q) as usize] * h2p[(r + s) as usize];
                        let m1 = p.min(q);
                        let m2 = r.min(s);
                        let (pp, qq, rr, ss) = (p - m1, q - m1, r - m2, s - m2);
                        let pre = [m1, m2, 0];
                        let bad = || RingError::Factorization([e, p, q, r, s]);
                        match freq {
                            0 => {
                                let t = match (pp, qq, rr, ss) {
                                    (0, 0, 0, 0) => 0,
                                    (_, 0, 0, _) if pp == 2 * ss => ss,
                                    (0, _, _, 0) if qq == 2 * rr => rr,
                                    _ => return Err(bad()),
                                };
                                add(&mut m0, n, e, pre, &pt[t as usize], coef);
                            }
                            1 => match (pp, qq, rr, ss) {
                                (_, 0, 0, _) if pp == 1 + 2 * ss => {
                                    let t = ss as usize;
                                    let a = poly_add(&pt[t], &poly_mul_mono(&ut[t], [0, 0, 1], 1.0));
                                    add(&mut alpha_m, n, e, pre, &a, coef);
                                    add(&mut beta_m, n, e, pre, &poly_mul_mono(&ut[t], [1, 0, 0], -1.0), coef);
                                }
                                (0, _, _, 0) if rr >= 1 && qq == 2 * rr - 1 => {
                                    let t = (rr - 1) as usize;
                                    let a = poly_mul_mono(&ut[t], [1, 1, 0], -1.0);
                                    let b = poly_add(&pt[t], &poly_mul_mono(&ut[t], [0, 0, 1], 1.0));
                                    add(&mut alpha_m, n, e, pre, &a, coef);
                                    add(&mut beta_m, n, e, pre, &b, coef);
                                }
                                _ => return Err(bad()),
                            },
                            _ => match (pp, qq, rr, ss) {
                                (0, _, _, 0) if rr >= 1 && qq == 2 * rr - 2 => {
                                    let t = (rr - 1) as usize;
                                    let g = poly_add(&pt[t], &poly_mul_mono(&ut[t], [0, 0, 1], 1.0));
                                    add(&mut gamma_m, n, e, pre, &g, coef);
                                    add(&mut delta_m, n, e, pre, &poly_mul_mono(&ut[t], [0, 1, 0], -1.0), coef);
                                }
                                (_, 0, 0, _) if pp == 2 + 2 * ss => {
                                    let t = ss as usize;
                                    let g = poly_mul_mono(&ut[t], [2, 0, 0], -1.0);
                                    let d = poly_add(&pt[t], &poly_mul_mono(&ut[t], [0, 0, 1], 1.0));
                                    add(&mut gamma_m, n, e, pre, &g, coef);
                                    add(&mut delta_m, n, e, pre, &d, coef);
                                }
                                _ => return Err(bad()),
                            },
                        }
                    }
                }
            }
        }
    }

    let g1 = spec.sign(1) * spec.sqrt_magnitude(1);
    let g2 = spec.sign(2) * spec.sqrt_magnitude(2);
    Ok(InvariantSet {
        b0: InvariantPoly::from_map(m0).scaled(spec.eps0()),
        a: InvariantPoly::from_map(alpha_m).scaled(g1).shifted(-1.0),
        b: InvariantPoly::from_map(beta_m).scaled(g1),
        c: InvariantPoly::from_map(gamma_m).scaled(g2).shifted(-1.0),
        d: InvariantPoly::from_map(delta_m).scaled(g2),
        degree,
        alpha,
        fit_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ModelSpec {
        ModelSpec::new(-1, vec![9.0, 6.66])
    }

    #[test]
    fn recurrence_matches_powers() {
        let (p, u) = recurrence_tables(6);
        let w = num_complex::Complex64::new(0.3, -0.7);
        let (pi1, pi2) = (0.8f64, 0.9f64);
        // choose π₁²π₂ = |W|² and π₃ = Re W
        let scale = w.norm_sqr() / (pi1 * pi1 * pi2);
        let pi2 = pi2 * scale;
        let eval = |poly: &Poly3| -> f64 {
            poly.iter()
                .map(|(k, c)| c * pi1.powi(k[0] as i32) * pi2.powi(k[1] as i32) * w.re.powi(k[2] as i32))
                .sum()
        };
        for t in 0..=6 {
            let wt = w.powu(t as u32);
            assert!((eval(&p[t]) - wt.re).abs() < 1e-12);
            assert!((eval(&u[t]) - wt.im / w.im).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_nonlinearity() {
        let inv = reduce_power_series(&[0.0, 1.0], &spec(), 1, 1.0, 0.0).unwrap();
        let lam = 0.7;
        let v = inv.eval(lam, 0.3, [0.5, 0.2, 0.1]);
        assert!((v.b0 - (-lam * 0.3)).abs() < 1e-15);
        assert!((v.a - (lam * 9.0 / 2.0 - 1.0)).abs() < 1e-14);
        assert!(v.b.abs() < 1e-15);
        assert!((v.c - (lam * 6.66 / 2.0 - 1.0)).abs() < 1e-14);
        assert!(v.d.abs() < 1e-15);
    }

    #[test]
    fn quadratic_nonlinearity_is_parseval() {
        let inv = reduce_power_series(&[0.0, 0.0, 1.0], &spec(), 2, 1.0, 0.0).unwrap();
        let (lam, v0, pi) = (0.9, -0.2, [0.4, 0.3, 0.1]);
        let v = inv.eval(lam, v0, pi);
        let want = -(lam * lam * v0 * v0 + lam * lam * 9.0 * pi[0] / 2.0 + lam * lam * 6.66 * pi[1] / 2.0);
        assert!((v.b0 - want).abs() < 1e-14);
    }

    #[test]
    fn needs_two_modes() {
        let s = ModelSpec::new(-1, vec![1.5]);
        assert!(reduce_power_series(&[0.0, 1.0], &s, 1, 1.0, 0.0).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let inv = reduce_power_series(&[0.1, 0.5, 0.0, -0.02], &spec(), 3, 1.0, 0.0).unwrap();
        let back = InvariantSet::from_json(&inv.to_json().unwrap()).unwrap();
        assert_eq!(back, inv);
    }
}
