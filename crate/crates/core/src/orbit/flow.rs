//! Orbit-space dynamics, equilibria and the N = 2 bifurcation skeleton.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::continuation::{
    continue_branch_oriented, critical_gains, Branch, ContinuationConfig, CriticalGain, SpecialKind, SpecialPoint,
};
use crate::error::{Result, RingError};
use crate::galerkin::{Nonlinearity, RingModel};
use crate::model::ModelSpec;
use crate::orbit::chebyshev::ChebyshevSeries;
use crate::orbit::invariants::{reduce_invariants, InvariantSet};
use crate::orbit::point::OrbitPoint;
use crate::quadrature::Quadrature;
use crate::solve::{fd_jacobian, newton_solve_with, null_vector, spectrum_stability, StabilityInfo, STABILITY_MARGIN};
use crate::systems::{EquilibriumSystem, Param, Params};

/// Slack on the orbit-space inequalities along branches.
pub const BRANCH_ORBIT_TOL: f64 = 1e-7;

/// Third orbit equation: derived by differentiating `π₃`, or the variant
/// with `2c π₁π₂` in place of `2b π₁π₂`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsForm {
    #[default]
    Corrected,
    CrossC,
}

/// Vector field on `(v₀, π₁, π₂, π₃)`; `drive0 = ε I₀`.
pub fn orbit_rhs(pt: &OrbitPoint, inv: &InvariantSet, spec: &ModelSpec, drive0: f64, form: RhsForm) -> [f64; 4] {
    let k = inv.eval(spec.gain, pt.v0, pt.pi());
    let tau = spec.time_constant;
    let (p1, p2, p3) = (pt.pi1, pt.pi2, pt.pi3);
    let cross = match form {
        RhsForm::Corrected => k.b,
        RhsForm::CrossC => k.c,
    };
    [
        (-pt.v0 + k.b0 + spec.v0_offset() + drive0) / tau,
        (2.0 * k.a * p1 + 2.0 * k.b * p3) / tau,
        (2.0 * k.c * p2 + 2.0 * k.d * p3) / tau,
        ((2.0 * k.a + k.c) * p3 + 2.0 * cross * p1 * p2 + k.d * p1 * p1) / tau,
    ]
}

/// Whether `λ ‖V‖∞` may leave the fit interval at `pt`.
pub fn exceeds_fit_interval(pt: &OrbitPoint, spec: &ModelSpec, alpha: f64) -> bool {
    let bound =
        pt.v0.abs() + (spec.magnitude(1) * pt.pi1.max(0.0)).sqrt() + (spec.magnitude(2) * pt.pi2.max(0.0)).sqrt();
    spec.gain * bound > alpha
}

/// Orbit-space equilibria as an [`EquilibriumSystem`]; stability is read
/// from the Cartesian Jacobian at the gauge representative.
#[derive(Clone, Debug)]
pub struct OrbitSystem {
    spec: ModelSpec,
    inv: Arc<InvariantSet>,
    cartesian: RingModel,
    i0: f64,
    form: RhsForm,
}

impl OrbitSystem {
    /// `series` is the polynomial the invariants were reduced from.
    pub fn new(spec: ModelSpec, series: Arc<ChebyshevSeries>, i0: f64) -> Result<Self> {
        let inv = Arc::new(reduce_invariants(&series, &spec)?);
        Self::from_parts(spec, inv, series, i0)
    }

    pub fn from_parts(spec: ModelSpec, inv: Arc<InvariantSet>, series: Arc<ChebyshevSeries>, i0: f64) -> Result<Self> {
        let nodes = (4 * series.degree() + 8).max(64);
        let cartesian = RingModel::with_quadrature(spec.clone(), Quadrature::periodic(nodes))?
            .with_nonlinearity(Nonlinearity::Polynomial(series));
        Ok(Self {
            spec,
            inv,
            cartesian,
            i0,
            form: RhsForm::Corrected,
        })
    }

    pub fn with_form(mut self, form: RhsForm) -> Self {
        self.form = form;
        self
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn invariants(&self) -> &InvariantSet {
        &self.inv
    }

    /// The Cartesian model with the same polynomial nonlinearity.
    pub fn cartesian_model(&self, p: &Params) -> RingModel {
        self.cartesian
            .with_spec(p.apply(&self.spec))
            .expect("mode count unchanged")
    }

    pub fn rhs(&self, pt: &OrbitPoint, p: &Params) -> [f64; 4] {
        orbit_rhs(pt, &self.inv, &p.apply(&self.spec), p.contrast * self.i0, self.form)
    }
}

impl EquilibriumSystem for OrbitSystem {
    fn dim(&self) -> usize {
        4
    }

    fn residual(&self, u: &DVector<f64>, p: &Params) -> DVector<f64> {
        DVector::from_row_slice(&self.rhs(&OrbitPoint::from_slice(u.as_slice()), p))
    }

    fn state_names(&self) -> Vec<String> {
        ["v0", "pi1", "pi2", "pi3"].iter().map(|s| s.to_string()).collect()
    }

    fn stability(&self, u: &DVector<f64>, p: &Params, _jac: &DMatrix<f64>) -> StabilityInfo {
        let rep = OrbitPoint::from_slice(u.as_slice()).representative();
        spectrum_stability(&self.cartesian_model(p).jacobian(&rep), STABILITY_MARGIN)
    }

    fn admissible(&self, u: &DVector<f64>, _p: &Params) -> bool {
        OrbitPoint::from_slice(u.as_slice()).contains(BRANCH_ORBIT_TOL)
    }
}

/// A continued orbit-space branch with the indices of points where the
/// fit-interval bound fails.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitBranch {
    pub branch: Branch,
    /// Index (1-based) of the Fourier mode that bifurcates, 0 for the trivial branch.
    pub mode: usize,
    pub alpha_violations: Vec<usize>,
}

fn flag_alpha(sys: &OrbitSystem, branch: &Branch) -> Vec<usize> {
    branch
        .points
        .iter()
        .enumerate()
        .filter(|(_, bp)| {
            let spec = sys.spec.clone().with_gain(bp.params[0]);
            exceeds_fit_interval(&OrbitPoint::from_slice(&bp.state), &spec, sys.inv.alpha)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Continues orbit-space equilibria in λ and flags fit-interval violations.
pub fn orbit_continue(
    sys: &OrbitSystem,
    base: &Params,
    start: &OrbitPoint,
    range: (f64, f64),
    orient: &DVector<f64>,
    cfg: &ContinuationConfig,
) -> Result<OrbitBranch> {
    let branch = continue_branch_oriented(sys, base, Param::Gain, &start.to_vec(), range, orient, cfg)?;
    let alpha_violations = flag_alpha(sys, &branch);
    Ok(OrbitBranch {
        branch,
        mode: 0,
        alpha_violations,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitSkeleton {
    /// Critical gains of the trivial equilibrium (Cartesian polynomial model).
    pub critical_gains: Vec<CriticalGain>,
    pub trivial: OrbitBranch,
    /// One branch per symmetry-breaking critical gain, in increasing λ.
    pub branches: Vec<OrbitBranch>,
}

/// Unforced trivial equilibrium `(v₀, 0, 0, 0)` at the base parameters.
pub fn trivial_equilibrium(sys: &OrbitSystem, p: &Params, cfg: &ContinuationConfig) -> Result<OrbitPoint> {
    let f = |y: &DVector<f64>| {
        let pt = OrbitPoint::new(y[0], 0.0, 0.0, 0.0);
        DVector::from_element(1, sys.rhs(&pt, p)[0])
    };
    let sol = newton_solve_with(
        &f,
        &|y: &DVector<f64>| fd_jacobian(&f, y),
        &DVector::zeros(1),
        &cfg.newton(),
    )?;
    Ok(OrbitPoint::new(sol.solution[0], 0.0, 0.0, 0.0))
}

/// Bifurcation skeleton of the unforced N = 2 model for `λ ∈ (0, lambda_max]`:
/// the trivial branch and the branches emanating from its O(2)
/// bifurcations, started by fixing the bifurcating invariant `π_k = delta`.
pub fn orbit_skeleton(
    sys: &OrbitSystem,
    lambda_max: f64,
    delta: f64,
    cfg: &ContinuationConfig,
) -> Result<OrbitSkeleton> {
    let base = Params::from_spec(&sys.spec, 0.0).with(Param::Gain, lambda_max);
    let model = sys.cartesian_model(&base);
    let crit = critical_gains(&model, lambda_max, 400);

    let p_lo = base.with(Param::Gain, 1e-3 * lambda_max);
    let t0 = trivial_equilibrium(sys, &p_lo, cfg)?;
    let mut orient = DVector::zeros(5);
    orient[4] = 1.0;
    let trivial = OrbitBranch {
        mode: 0,
        ..orbit_continue(sys, &p_lo, &t0, (0.0, lambda_max), &orient, cfg)?
    };

    let mut branches = Vec::new();
    for cg in crit.iter().filter(|c| c.multiplicity >= 2) {
        let pc = base.with(Param::Gain, cg.gain);
        let triv = trivial_equilibrium(sys, &pc, cfg)?;
        let rep = triv.representative();
        let e = null_vector(&sys.cartesian_model(&pc).jacobian(&rep));
        // real coordinates (v₀, Re z₁, Im z₁, Re z₂, Im z₂)
        let w1 = e[1].hypot(e[2]);
        let w2 = e[3].hypot(e[4]);
        let mode = if w1 >= w2 { 1 } else { 2 };
        let f = |y: &DVector<f64>| {
            let pt = OrbitPoint::from_slice(&y.as_slice()[..4]);
            let r = sys.rhs(&pt, &base.with(Param::Gain, y[4]));
            let mut out = DVector::zeros(5);
            out.rows_mut(0, 4).copy_from_slice(&r);
            out[4] = y[mode] - delta;
            out
        };
        let mut y0 = DVector::zeros(5);
        y0[0] = triv.v0;
        y0[mode] = delta;
        y0[4] = cg.gain;
        let sol = newton_solve_with(&f, &|y: &DVector<f64>| fd_jacobian(&f, y), &y0, &cfg.newton())
            .map_err(|_| RingError::BranchSwitch(cg.gain))?;
        let y = sol.solution;
        let start = OrbitPoint::from_slice(&y.as_slice()[..4]);
        let mut orient = DVector::zeros(5);
        orient[mode] = 1.0;
        let mut ob = orbit_continue(
            sys,
            &base.with(Param::Gain, y[4]),
            &start,
            (0.0, lambda_max),
            &orient,
            cfg,
        )?;
        ob.mode = mode;
        ob.branch.special_points.push(SpecialPoint {
            index: 0,
            kind: SpecialKind::BranchPoint,
            params: vec![cg.gain],
        });
        branches.push(ob);
    }
    Ok(OrbitSkeleton {
        critical_gains: crit,
        trivial,
        branches,
    })
}
