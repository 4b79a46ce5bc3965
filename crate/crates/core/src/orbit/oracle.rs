//! Coefficient functions by quadrature on a Cartesian representative.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Result, RingError};
use crate::galerkin::{Nonlinearity, RingModel};
use crate::model::ModelSpec;
use crate::orbit::invariants::InvariantValues;
use crate::orbit::point::OrbitPoint;
use crate::quadrature::Quadrature;
use crate::state::CortexState;

/// Nodes of the periodic rule; exact for polynomial nonlinearities of
/// degree below `ORACLE_NODES / 2 - 1`.
pub const ORACLE_NODES: usize = 256;

/// Solves `B = A p + B' q` for real `(A, B')` given complex `p`, `q`.
fn split(b: Complex64, p: Complex64, q: Complex64) -> Option<(f64, f64)> {
    let m = Matrix2::new(p.re, q.re, p.im, q.im);
    let det = m.determinant();
    if det.abs() < 1e-14 * (1.0 + p.norm_sqr() + q.norm_sqr()) {
        return None;
    }
    let x = m.lu().solve(&Vector2::new(b.re, b.im))?;
    Some((x[0], x[1]))
}

/// `(B̃₀, a, b, c, d)` from the moments at an arbitrary representative
/// `state` of an interior orbit.
pub fn oracle_at_state(state: &CortexState, model: &RingModel) -> Result<InvariantValues> {
    let spec = model.spec();
    if spec.n_modes != 2 {
        return Err(RingError::InvalidParameter("oracle needs n_modes = 2".into()));
    }
    let m = model.moments(state);
    let (z1, z2) = (state.z[0], state.z[1]);
    let b1 = m.mk[0] * spec.sign(1) * spec.sqrt_magnitude(1);
    let b2 = m.mk[1] * spec.sign(2) * spec.sqrt_magnitude(2);
    let (a, b) = split(b1, z1, z1.conj() * z2).ok_or(RingError::BoundaryOrbit)?;
    let (c, d) = split(b2, z2, z1 * z1).ok_or(RingError::BoundaryOrbit)?;
    Ok(InvariantValues {
        b0: spec.eps0() * m.m0,
        a: a - 1.0,
        b,
        c: c - 1.0,
        d,
    })
}

/// Builds the quadrature model used by [`invariant_oracle`].
pub fn oracle_model(spec: &ModelSpec, nl: Nonlinearity) -> Result<RingModel> {
    Ok(RingModel::with_quadrature(spec.clone(), Quadrature::periodic(ORACLE_NODES))?.with_nonlinearity(nl))
}

/// Coefficient functions at an interior orbit point, by quadrature on the
/// gauge representative. Orbits within relative distance `1e-12` of the
/// boundary are refused.
pub fn invariant_oracle(pt: &OrbitPoint, model: &RingModel) -> Result<InvariantValues> {
    if pt.pi1 <= 0.0 || pt.discriminant() <= 1e-12 * pt.pi1 * pt.pi1 * pt.pi2 {
        return Err(RingError::BoundaryOrbit);
    }
    oracle_at_state(&pt.representative(), model)
}
