//! Quadrature rules on the orientation interval [-π/2, π/2].
//!
//! Weights are normalised to sum to one, so `Σ wᵢ f(yᵢ)` approximates
//! `(1/π) ∫ f(y) dy`. Nodes come in mirror pairs `(y, -y)` so that
//! integrands with a definite parity can be accumulated exactly.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Result, RingError};

/// Smallest Gauss–Legendre order accepted for the Galerkin integrals.
pub const MIN_GAUSS_ORDER: usize = 40;

/// Default Gauss–Legendre order.
pub const DEFAULT_GAUSS_ORDER: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    GaussLegendre,
    /// Uniform periodic (trapezoidal) rule, exact for trigonometric
    /// polynomials of frequency below the node count.
    Periodic,
}

#[derive(Clone, Debug)]
pub struct Quadrature {
    kind: RuleKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Index pairs `(i, j)` with `nodes[j] == -nodes[i]` (or the periodic image).
    pairs: Vec<(usize, usize)>,
    /// Self-mirrored nodes (0, or -π/2 for the periodic rule).
    singles: Vec<usize>,
}

impl Quadrature {
    pub fn gauss_legendre(order: usize) -> Result<Self> {
        if order < MIN_GAUSS_ORDER {
            return Err(RingError::QuadratureOrder {
                order,
                min: MIN_GAUSS_ORDER,
            });
        }
        Ok(Self::gauss_legendre_unchecked(order))
    }

    /// Gauss–Legendre rule without the minimum-order guard (used for
    /// convergence studies and tests).
    pub fn gauss_legendre_unchecked(order: usize) -> Self {
        let (xs, ws) = legendre_nodes(order);
        let nodes: Vec<f64> = xs.iter().map(|x| FRAC_PI_2 * x).collect();
        let weights: Vec<f64> = ws.iter().map(|w| 0.5 * w).collect();
        let n = order;
        let mut pairs = Vec::with_capacity(n / 2);
        let mut singles = Vec::new();
        // legendre_nodes returns nodes in descending order, symmetric by construction.
        for i in 0..n / 2 {
            pairs.push((i, n - 1 - i));
        }
        if n % 2 == 1 {
            singles.push(n / 2);
        }
        Self {
            kind: RuleKind::GaussLegendre,
            nodes,
            weights,
            pairs,
            singles,
        }
    }

    /// Uniform rule with `m` nodes `-π/2 + jπ/m`.
    pub fn periodic(m: usize) -> Self {
        assert!(m >= 2, "periodic rule needs at least two nodes");
        let nodes: Vec<f64> = (0..m).map(|j| -FRAC_PI_2 + PI * j as f64 / m as f64).collect();
        let weights = vec![1.0 / m as f64; m];
        let mut pairs = Vec::new();
        let mut singles = vec![0];
        // node j mirrors to m - j
        for j in 1..m {
            let k = m - j;
            if j < k {
                pairs.push((j, k));
            } else if j == k {
                singles.push(j);
            }
        }
        // Overwrite mirrored nodes with exact negatives so parity is exact.
        let mut nodes = nodes;
        for &(i, j) in &pairs {
            nodes[j] = -nodes[i];
        }
        Self {
            kind: RuleKind::Periodic,
            nodes,
            weights,
            pairs,
            singles,
        }
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn singles(&self) -> &[usize] {
        &self.singles
    }

    /// `(1/π) ∫ f` over the orientation interval.
    pub fn mean<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&y, &w)| w * f(y)).sum()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], nodes in descending order.
fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = x;
        xs[n - 1 - i] = -x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
    (xs, ws)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_low_order() {
        assert!(matches!(
            Quadrature::gauss_legendre(10),
            Err(RingError::QuadratureOrder { order: 10, min: 40 })
        ));
    }

    #[test]
    fn weights_sum_to_one() {
        for q in [
            Quadrature::gauss_legendre(64).unwrap(),
            Quadrature::gauss_legendre_unchecked(41),
            Quadrature::periodic(128),
            Quadrature::periodic(7),
        ] {
            let s: f64 = q.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_is_exact_on_polynomials() {
        let q = Quadrature::gauss_legendre(40).unwrap();
        // (1/π) ∫ y^4 dy over [-π/2, π/2] = (π/2)^4 / 5
        let exact = FRAC_PI_2.powi(4) / 5.0;
        assert!((q.mean(|y| y.powi(4)) - exact).abs() < 1e-14);
    }

    #[test]
    fn mirror_structure_is_exact() {
        for q in [
            Quadrature::gauss_legendre(64).unwrap(),
            Quadrature::gauss_legendre_unchecked(45),
            Quadrature::periodic(128),
            Quadrature::periodic(9),
        ] {
            let covered = 2 * q.pairs().len() + q.singles().len();
            assert_eq!(covered, q.len());
            for &(i, j) in q.pairs() {
                assert_eq!(q.nodes()[i], -q.nodes()[j]);
                assert_eq!(q.weights()[i], q.weights()[j]);
            }
        }
    }

    #[test]
    fn periodic_rule_is_exact_on_trig_polynomials() {
        let q = Quadrature::periodic(16);
        for k in 1..16 {
            let v = q.mean(|y| (2.0 * k as f64 * y).cos());
            assert!(v.abs() < 1e-14, "k = {k}: {v}");
        }
        assert!((q.mean(|y| (2.0 * y).cos().powi(2)) - 0.5).abs() < 1e-14);
    }
}
