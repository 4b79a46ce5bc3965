//! Tuning curves of N = 2 orbit-space equilibria.

use std::f64::consts::PI;

use crate::error::{Result, RingError};
use crate::model::ModelSpec;
use crate::orbit::point::OrbitPoint;

/// Samples `(x, S(λV(x)))` on `m` points of `[-π/2, π/2)` for the
/// representative with the first-mode peak at `x = 0`:
/// `V = v₀ + √(J₁π₁) cos 2x + √(|J₂|π₂) cos(4x - θ₂)`,
/// `cos θ₂ = π₃/(π₁√π₂)`, `sin θ₂ ≥ 0`.
pub fn tuning_curve_n2(pt: &OrbitPoint, spec: &ModelSpec, m: usize) -> Result<Vec<(f64, f64)>> {
    if spec.n_modes != 2 {
        return Err(RingError::InvalidParameter("tuning_curve_n2 needs n_modes = 2".into()));
    }
    if pt.pi1 <= 0.0 {
        return Err(RingError::Untuned);
    }
    if m == 0 {
        return Err(RingError::EmptyGrid("tuning curve"));
    }
    let pi2 = pt.pi2.max(0.0);
    let a1 = (spec.magnitude(1) * pt.pi1).sqrt();
    let a2 = (spec.magnitude(2) * pi2).sqrt();
    let theta2 = if pi2 > 0.0 {
        (pt.pi3 / (pt.pi1 * pi2.sqrt())).clamp(-1.0, 1.0).acos()
    } else {
        0.0
    };
    Ok((0..m)
        .map(|j| {
            let x = -PI / 2.0 + PI * j as f64 / m as f64;
            let v = pt.v0 + a1 * (2.0 * x).cos() + a2 * (4.0 * x - theta2).cos();
            (x, spec.sigmoid(spec.gain * v))
        })
        .collect())
}

/// Number of strict local maxima of a periodic sample sequence.
pub fn count_peaks(values: &[f64]) -> usize {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let (l, c, r) = (values[(i + n - 1) % n], values[i], values[(i + 1) % n]);
            c > l && c >= r
        })
        .count()
}
