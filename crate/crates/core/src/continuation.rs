//! Pseudo-arclength continuation, fold loci and the μ-homotopy start.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RingError};
use crate::galerkin::RingModel;
use crate::model::{ModelSpec, SigmoidKind};
use crate::solve::{
    fd_jacobian, kernel_direction, newton_solve_with, null_vector, spectrum_stability, sup, JacobianMode, NewtonConfig,
    StabilityInfo, FD_STEP,
};
use crate::state::CortexState;
use crate::stimulus::Stimulus;
use crate::systems::{Chart, EquilibriumSystem, GalerkinSystem, Param, Params};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationConfig {
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub max_steps: usize,
    pub jacobian: JacobianMode,
    /// Arclength resolution of fold and crossing refinement.
    #[serde(default = "default_fold_tol")]
    pub fold_tol: f64,
    /// Terminate once any state component exceeds this magnitude.
    #[serde(default)]
    pub state_bound: Option<f64>,
}

fn default_fold_tol() -> f64 {
    1e-8
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            ds: 0.01,
            ds_min: 1e-8,
            ds_max: 0.1,
            newton_tol: 1e-10,
            newton_max_iters: 12,
            max_steps: 5000,
            jacobian: JacobianMode::Analytic,
            fold_tol: default_fold_tol(),
            state_bound: None,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.ds_min && self.ds_min <= self.ds && self.ds <= self.ds_max) {
            return Err(RingError::InvalidParameter(format!(
                "need 0 < ds_min <= ds <= ds_max, got {} / {} / {}",
                self.ds_min, self.ds, self.ds_max
            )));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iters == 0 {
            return Err(RingError::InvalidParameter(
                "newton_tol must be positive and newton_max_iters nonzero".into(),
            ));
        }
        if !(self.fold_tol > 0.0) {
            return Err(RingError::InvalidParameter("fold_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn newton(&self) -> NewtonConfig {
        NewtonConfig {
            tol: self.newton_tol,
            max_iters: 4 * self.newton_max_iters,
            ..NewtonConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialKind {
    Start,
    Fold,
    BranchPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoint {
    pub index: usize,
    pub kind: SpecialKind,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub params: Vec<f64>,
    pub state: Vec<f64>,
    pub stable: bool,
    pub n_unstable: usize,
    pub leading_real: f64,
    /// Parameter component of the unit tangent (first parameter).
    pub tangent_param: f64,
    pub is_fold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ParameterBound,
    StateBound,
    MaxSteps,
    StepFailure(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub param_names: Vec<String>,
    pub state_names: Vec<String>,
    pub points: Vec<BranchPoint>,
    pub special_points: Vec<SpecialPoint>,
    pub termination: Termination,
}

impl Branch {
    pub fn folds(&self) -> impl Iterator<Item = &BranchPoint> {
        self.points.iter().filter(|p| p.is_fold)
    }

    /// CSV `step,<params>,<state>,n_unstable,is_fold`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut cols = vec!["step".to_string()];
        cols.extend(self.param_names.iter().cloned());
        cols.extend(self.state_names.iter().cloned());
        cols.push("n_unstable".into());
        cols.push("is_fold".into());
        writeln!(w, "{}", cols.join(","))?;
        for (i, p) in self.points.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(p.params.iter().map(|x| x.to_string()));
            row.extend(p.state.iter().map(|x| x.to_string()));
            row.push(p.n_unstable.to_string());
            row.push(u8::from(p.is_fold).to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Implicitly defined curve `G(X) = 0`, `G: ℝⁿ⁺¹ → ℝⁿ`, whose last
/// coordinate is the continued parameter.
pub trait Curve {
    fn n_eq(&self) -> usize;
    fn eval(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `n × (n+1)` Jacobian.
    fn jac(&self, x: &DVector<f64>) -> DMatrix<f64>;
    fn admissible(&self, _x: &DVector<f64>) -> bool {
        true
    }
}

/// `F(u; p) = 0` with `X = (u, p)`.
pub struct OneParamCurve<'a, S: EquilibriumSystem> {
    pub sys: &'a S,
    pub base: Params,
    pub param: Param,
    pub mode: JacobianMode,
}

impl<S: EquilibriumSystem> OneParamCurve<'_, S> {
    fn split(&self, x: &DVector<f64>) -> (DVector<f64>, Params) {
        let n = self.sys.dim();
        (x.rows(0, n).into_owned(), self.base.with(self.param, x[n]))
    }
}

impl<S: EquilibriumSystem> Curve for OneParamCurve<'_, S> {
    fn n_eq(&self) -> usize {
        self.sys.dim()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let (u, p) = self.split(x);
        self.sys.residual(&u, &p)
    }

    fn jac(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.sys.dim();
        let (u, p) = self.split(x);
        let ju = self.sys.jacobian(&u, &p, self.mode);
        let pv = x[n];
        let h = FD_STEP * (1.0 + pv.abs());
        let at = |v: f64| self.sys.residual(&u, &self.base.with(self.param, v));
        let finite = |r: &DVector<f64>| r.iter().all(|v| v.is_finite());
        let (rp, rm) = (at(pv + h), at(pv - h));
        // one-sided at the edge of the admissible parameter range
        let fp = match (finite(&rp), finite(&rm)) {
            (true, true) => (rp - rm) / (2.0 * h),
            (true, false) => (rp - at(pv)) / h,
            (false, true) => (at(pv) - rm) / h,
            (false, false) => rp,
        };
        let mut a = DMatrix::zeros(n, n + 1);
        a.view_mut((0, 0), (n, n)).copy_from(&ju);
        a.set_column(n, &fp);
        a
    }

    fn admissible(&self, x: &DVector<f64>) -> bool {
        let (u, p) = self.split(x);
        self.sys.admissible(&u, &p)
    }
}

/// Moore–Spence system `(F, F_u φ, ℓ·φ - 1)` in `X = (u, q, φ, p)` where `q`
/// is the free parameter and `p` the continued one.
pub struct FoldCurve<'a, S: EquilibriumSystem> {
    pub sys: &'a S,
    pub base: Params,
    pub continued: Param,
    pub free: Param,
    pub ell: DVector<f64>,
    pub mode: JacobianMode,
}

impl<S: EquilibriumSystem> FoldCurve<'_, S> {
    fn split(&self, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>, Params) {
        let n = self.sys.dim();
        let u = x.rows(0, n).into_owned();
        let phi = x.rows(n + 1, n).into_owned();
        let p = self.base.with(self.free, x[n]).with(self.continued, x[2 * n + 1]);
        (u, phi, p)
    }
}

impl<S: EquilibriumSystem> Curve for FoldCurve<'_, S> {
    fn n_eq(&self) -> usize {
        2 * self.sys.dim() + 1
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.sys.dim();
        let (u, phi, p) = self.split(x);
        let f = self.sys.residual(&u, &p);
        let jphi = self.sys.jacobian(&u, &p, self.mode) * &phi;
        let mut out = DVector::zeros(2 * n + 1);
        out.rows_mut(0, n).copy_from(&f);
        out.rows_mut(n, n).copy_from(&jphi);
        out[2 * n] = self.ell.dot(&phi) - 1.0;
        out
    }

    fn jac(&self, x: &DVector<f64>) -> DMatrix<f64> {
        fd_jacobian(&|y: &DVector<f64>| self.eval(y), x)
    }
}

/// Unit tangent from the bordered system `[A; prevᵀ] t = e_{n+1}`,
/// oriented along `prev`.
fn tangent(a: &DMatrix<f64>, prev: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n + 1)).copy_from(a);
    m.set_row(n, &prev.transpose());
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let t = match m.lu().solve(&rhs) {
        Some(t) if t.iter().all(|v| v.is_finite()) && t.norm() > 0.0 => t,
        _ => kernel_direction(a),
    };
    let t = t.normalize();
    if t.dot(prev) < 0.0 {
        -t
    } else {
        t
    }
}

/// Newton on `[G(X); tᵀ(X - x_pred)] = 0`.
fn correct<C: Curve>(
    curve: &C,
    x_pred: &DVector<f64>,
    t: &DVector<f64>,
    cfg: &ContinuationConfig,
) -> Option<(DVector<f64>, usize)> {
    let n = curve.n_eq();
    let mut x = x_pred.clone();
    for it in 0..=cfg.newton_max_iters {
        let g = curve.eval(&x);
        if !g.iter().all(|v| v.is_finite()) {
            return None;
        }
        if sup(&g) <= cfg.newton_tol {
            return curve.admissible(&x).then_some((x, it));
        }
        if it == cfg.newton_max_iters {
            break;
        }
        let a = curve.jac(&x);
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n + 1)).copy_from(&a);
        m.set_row(n, &t.transpose());
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-g));
        rhs[n] = -t.dot(&(&x - x_pred));
        let dx = m.lu().solve(&rhs)?;
        x += dx;
    }
    None
}

/// Raw output of [`trace`].
#[derive(Clone, Debug)]
pub struct Trace {
    pub xs: Vec<DVector<f64>>,
    pub tangents: Vec<DVector<f64>>,
    pub is_fold: Vec<bool>,
    pub termination: Termination,
}

/// Finds `s ∈ (0, s_hi]` where `g` changes sign along the corrected curve
/// through `x_old + s t_old`, by bisection down to `tol` followed by one
/// secant step.
fn bisect_step<C, G>(
    curve: &C,
    x_old: &DVector<f64>,
    t_old: &DVector<f64>,
    s_hi: f64,
    cfg: &ContinuationConfig,
    g: G,
) -> Option<(DVector<f64>, DVector<f64>)>
where
    C: Curve,
    G: Fn(&DVector<f64>, &DVector<f64>) -> f64,
{
    let eval = |s: f64| -> Option<(DVector<f64>, DVector<f64>, f64)> {
        let xp = x_old + t_old * s;
        let (x, _) = correct(curve, &xp, t_old, cfg)?;
        let t = tangent(&curve.jac(&x), t_old);
        let v = g(&x, &t);
        Some((x, t, v))
    };
    let g0 = g(x_old, t_old);
    let (mut a, mut ga) = (0.0, g0);
    let (mut b, mut best) = (s_hi, eval(s_hi)?);
    while b - a > cfg.fold_tol {
        let m = 0.5 * (a + b);
        let Some(r) = eval(m) else { break };
        if (r.2 > 0.0) == (g0 > 0.0) && r.2 != 0.0 {
            a = m;
            ga = r.2;
        } else {
            b = m;
            best = r;
        }
    }
    let gb = best.2;
    if gb != ga {
        let s = a - ga * (b - a) / (gb - ga);
        if let Some(r) = eval(s) {
            if r.2.abs() <= gb.abs() {
                best = r;
            }
        }
    }
    Some((best.0, best.1))
}

/// Solves `G(u, p_fixed) = 0` for `u` from the guess `x`.
fn solve_at_param<C: Curve>(curve: &C, x: &DVector<f64>, value: f64, cfg: &ContinuationConfig) -> Option<DVector<f64>> {
    let n = curve.n_eq();
    let embed = |u: &DVector<f64>| {
        let mut y = DVector::zeros(n + 1);
        y.rows_mut(0, n).copy_from(u);
        y[n] = value;
        y
    };
    let f = |u: &DVector<f64>| curve.eval(&embed(u));
    let j = |u: &DVector<f64>| curve.jac(&embed(u)).columns(0, n).into_owned();
    let u0 = x.rows(0, n).into_owned();
    newton_solve_with(&f, &j, &u0, &cfg.newton())
        .ok()
        .map(|o| embed(&o.solution))
}

/// Traces the curve from `x0` (on the curve) with initial orientation
/// `orient`, staying within `range` in the last coordinate.
pub fn trace<C: Curve>(
    curve: &C,
    x0: &DVector<f64>,
    orient: &DVector<f64>,
    range: (f64, f64),
    cfg: &ContinuationConfig,
) -> Trace {
    let n = curve.n_eq();
    let (lo, hi) = range;
    let mut t = tangent(&curve.jac(x0), &kernel_direction(&curve.jac(x0)));
    if t.dot(orient) < 0.0 {
        t = -t;
    }
    let mut out = Trace {
        xs: vec![x0.clone()],
        tangents: vec![t.clone()],
        is_fold: vec![false],
        termination: Termination::MaxSteps,
    };
    let mut x = x0.clone();
    let mut ds = cfg.ds;
    for _ in 0..cfg.max_steps {
        let (xn, tn, iters, used) = loop {
            let xp = &x + &t * ds;
            if xp[n] > hi || xp[n] < lo {
                // the parameter may be invalid beyond the range: land on it
                let bound = if xp[n] > hi { hi } else { lo };
                let guess = &x + (&xp - &x) * ((bound - x[n]) / (xp[n] - x[n]));
                if let Some(xb) = solve_at_param(curve, &guess, bound, cfg) {
                    let tb = tangent(&curve.jac(&xb), &t);
                    if t[n] * tb[n] < 0.0 {
                        if let Some((xf, tf)) = bisect_step(curve, &x, &t, ds, cfg, |_, tt| tt[n]) {
                            out.xs.push(xf);
                            out.tangents.push(tf);
                            out.is_fold.push(true);
                        }
                    }
                    out.xs.push(xb);
                    out.tangents.push(tb);
                    out.is_fold.push(false);
                    out.termination = Termination::ParameterBound;
                    return out;
                }
            }
            let attempt = correct(curve, &xp, &t, cfg).and_then(|(xn, it)| {
                let tn = tangent(&curve.jac(&xn), &t);
                let jump = (&xn - &xp).norm();
                (jump <= ds && tn.dot(&t) > 0.5).then_some((xn, tn, it))
            });
            match attempt {
                Some((xn, tn, it)) => break (xn, tn, it, ds),
                None => {
                    ds *= 0.5;
                    if ds < cfg.ds_min {
                        out.termination = Termination::StepFailure(format!(
                            "corrector failed at step size below {:e} near parameter {}",
                            cfg.ds_min, x[n]
                        ));
                        return out;
                    }
                }
            }
        };

        if t[n] * tn[n] < 0.0 {
            if let Some((xf, tf)) = bisect_step(curve, &x, &t, used, cfg, |_, tt| tt[n]) {
                out.xs.push(xf);
                out.tangents.push(tf);
                out.is_fold.push(true);
            }
        }

        if xn[n] > hi || xn[n] < lo {
            let bound = if xn[n] > hi { hi } else { lo };
            let frac = (bound - x[n]) / (xn[n] - x[n]);
            let guess = &x + (&xn - &x) * frac;
            if let Some(xb) = solve_at_param(curve, &guess, bound, cfg) {
                let tb = tangent(&curve.jac(&xb), &t);
                out.xs.push(xb);
                out.tangents.push(tb);
                out.is_fold.push(false);
            }
            out.termination = Termination::ParameterBound;
            return out;
        }
        if let Some(b) = cfg.state_bound {
            if xn.rows(0, n).iter().any(|v| v.abs() > b) {
                out.termination = Termination::StateBound;
                return out;
            }
        }
        out.xs.push(xn.clone());
        out.tangents.push(tn.clone());
        out.is_fold.push(false);
        x = xn;
        t = tn;
        if iters <= 3 {
            ds = (ds * 1.5).min(cfg.ds_max);
        }
    }
    out
}

fn assemble_branch<F>(tr: &Trace, param_names: Vec<String>, state_names: Vec<String>, extract: F) -> Branch
where
    F: Fn(&DVector<f64>) -> (Vec<f64>, Vec<f64>, StabilityInfo),
{
    let last = tr.xs[0].len() - 1;
    let mut points = Vec::with_capacity(tr.xs.len());
    let mut special = Vec::new();
    for (i, (x, t)) in tr.xs.iter().zip(&tr.tangents).enumerate() {
        let (params, state, stab) = extract(x);
        if i == 0 {
            special.push(SpecialPoint {
                index: 0,
                kind: SpecialKind::Start,
                params: params.clone(),
            });
        }
        if tr.is_fold[i] {
            special.push(SpecialPoint {
                index: i,
                kind: SpecialKind::Fold,
                params: params.clone(),
            });
        }
        points.push(BranchPoint {
            params,
            state,
            stable: stab.stable(),
            n_unstable: stab.n_unstable,
            leading_real: stab.leading_real,
            tangent_param: t[last],
            is_fold: tr.is_fold[i],
        });
    }
    Branch {
        param_names,
        state_names,
        points,
        special_points: special,
        termination: tr.termination.clone(),
    }
}

/// Continues equilibria of `sys` in `param` from `start`, initially moving
/// in the direction of `direction` (sign) in the parameter.
pub fn continue_branch<S: EquilibriumSystem>(
    sys: &S,
    base: &Params,
    param: Param,
    start: &[f64],
    range: (f64, f64),
    direction: f64,
    cfg: &ContinuationConfig,
) -> Result<Branch> {
    cfg.validate()?;
    let n = sys.dim();
    let mut orient = DVector::zeros(n + 1);
    orient[n] = direction.signum();
    continue_branch_oriented(sys, base, param, start, range, &orient, cfg)
}

/// As [`continue_branch`] with an explicit orientation vector in `(u, p)`.
pub fn continue_branch_oriented<S: EquilibriumSystem>(
    sys: &S,
    base: &Params,
    param: Param,
    start: &[f64],
    range: (f64, f64),
    orient: &DVector<f64>,
    cfg: &ContinuationConfig,
) -> Result<Branch> {
    cfg.validate()?;
    let n = sys.dim();
    if start.len() != n {
        return Err(RingError::InvalidParameter(format!(
            "start has {} components, system has {n}",
            start.len()
        )));
    }
    let p0 = base.get(param);
    let curve = OneParamCurve {
        sys,
        base: *base,
        param,
        mode: cfg.jacobian,
    };
    let u0 = newton_solve_with(
        &|u: &DVector<f64>| sys.residual(u, base),
        &|u: &DVector<f64>| sys.jacobian(u, base, cfg.jacobian),
        &DVector::from_column_slice(start),
        &cfg.newton(),
    )?
    .solution;
    let mut x0 = DVector::zeros(n + 1);
    x0.rows_mut(0, n).copy_from(&u0);
    x0[n] = p0;
    let tr = trace(&curve, &x0, orient, range, cfg);
    Ok(assemble_branch(
        &tr,
        vec![param.name().to_string()],
        sys.state_names(),
        |x| {
            let (u, p) = curve.split(x);
            let jac = sys.jacobian(&u, &p, cfg.jacobian);
            let stab = sys.stability(&u, &p, &jac);
            (vec![x[n]], u.as_slice().to_vec(), stab)
        },
    ))
}

/// All equilibria at `param = value` obtained by correcting the branch
/// points bracketing each crossing of `value`.
pub fn slice_branch<S: EquilibriumSystem>(
    sys: &S,
    base: &Params,
    param: Param,
    branch: &Branch,
    value: f64,
    cfg: &ContinuationConfig,
) -> Vec<Vec<f64>> {
    let p = base.with(param, value);
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut push = |u: DVector<f64>| {
        if !out
            .iter()
            .any(|v| v.iter().zip(u.iter()).all(|(a, b)| (a - b).abs() < 1e-9))
        {
            out.push(u.as_slice().to_vec());
        }
    };
    let solve = |guess: &[f64]| {
        newton_solve_with(
            &|u: &DVector<f64>| sys.residual(u, &p),
            &|u: &DVector<f64>| sys.jacobian(u, &p, cfg.jacobian),
            &DVector::from_column_slice(guess),
            &cfg.newton(),
        )
        .ok()
        .map(|o| o.solution)
    };
    for w in branch.points.windows(2) {
        let (a, b) = (w[0].params[0] - value, w[1].params[0] - value);
        if a == 0.0 {
            if let Some(u) = solve(&w[0].state) {
                push(u);
            }
        } else if a * b < 0.0 {
            let f = a / (a - b);
            let guess: Vec<f64> = w[0]
                .state
                .iter()
                .zip(&w[1].state)
                .map(|(x, y)| x + f * (y - x))
                .collect();
            if let Some(u) = solve(&guess) {
                push(u);
            }
        }
    }
    if let Some(last) = branch.points.last() {
        if last.params[0] == value {
            if let Some(u) = solve(&last.state) {
                push(u);
            }
        }
    }
    out
}

/// Fold curve in the plane of two parameters.
#[derive(Clone, Debug)]
pub struct FoldLocus {
    /// Parameters `(continued, free)`; state is `u`.
    pub branch: Branch,
    /// Refined points where the continued parameter crosses zero.
    pub zero_crossings: Vec<BranchPoint>,
}

/// Continues a fold of `sys` (state `fold_state`, with the free parameter
/// at `free_value`) in the `continued` parameter.
#[allow(clippy::too_many_arguments)]
pub fn fold_locus<S: EquilibriumSystem>(
    sys: &S,
    base: &Params,
    fold_state: &[f64],
    continued: Param,
    free: Param,
    free_value: f64,
    range: (f64, f64),
    direction: f64,
    cfg: &ContinuationConfig,
) -> Result<FoldLocus> {
    cfg.validate()?;
    let n = sys.dim();
    let base = base.with(free, free_value);
    let u = DVector::from_column_slice(fold_state);
    let phi = null_vector(&sys.jacobian(&u, &base, cfg.jacobian));
    let curve = FoldCurve {
        sys,
        base,
        continued,
        free,
        ell: phi.clone(),
        mode: cfg.jacobian,
    };
    let mut x0 = DVector::zeros(2 * n + 2);
    x0.rows_mut(0, n).copy_from(&u);
    x0[n] = free_value;
    x0.rows_mut(n + 1, n).copy_from(&phi);
    x0[2 * n + 1] = base.get(continued);
    let x0 = solve_at_param(&curve, &x0, base.get(continued), cfg).ok_or(RingError::NewtonDiverged {
        iterations: cfg.newton_max_iters,
        residual: sup(&curve.eval(&x0)),
    })?;
    let mut orient = DVector::zeros(2 * n + 2);
    orient[2 * n + 1] = direction.signum();
    let tr = trace(&curve, &x0, &orient, range, cfg);
    let extract = |x: &DVector<f64>| {
        let (u, _, p) = curve.split(x);
        let jac = sys.jacobian(&u, &p, cfg.jacobian);
        let stab = sys.stability(&u, &p, &jac);
        (vec![x[2 * n + 1], x[n]], u.as_slice().to_vec(), stab)
    };
    let mut zero_crossings = Vec::new();
    for i in 0..tr.xs.len().saturating_sub(1) {
        let (a, b) = (tr.xs[i][2 * n + 1], tr.xs[i + 1][2 * n + 1]);
        if a != 0.0 && a * b <= 0.0 {
            let s_hi = tr.tangents[i].dot(&(&tr.xs[i + 1] - &tr.xs[i]));
            if let Some((xz, tz)) = bisect_step(&curve, &tr.xs[i], &tr.tangents[i], s_hi, cfg, |x, _| x[2 * n + 1]) {
                let (params, state, stab) = extract(&xz);
                zero_crossings.push(BranchPoint {
                    params,
                    state,
                    stable: stab.stable(),
                    n_unstable: stab.n_unstable,
                    leading_real: stab.leading_real,
                    tangent_param: tz[2 * n + 1],
                    is_fold: true,
                });
            }
        }
    }
    let branch = assemble_branch(
        &tr,
        vec![continued.name().to_string(), free.name().to_string()],
        sys.state_names(),
        extract,
    );
    Ok(FoldLocus { branch, zero_crossings })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalGain {
    pub gain: f64,
    /// Number of eigenvalues crossing (2 for an O(2) pair).
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct HomotopyResult {
    pub critical_gains: Vec<CriticalGain>,
    /// Bifurcated branches at `μ = 0`, continued in λ (reflection chart).
    pub gain_branches: Vec<Branch>,
    /// Continuations in μ at the target gain, starting with the trivial state.
    pub mu_branches: Vec<Branch>,
    /// Distinct equilibria of the `μ = 1` model.
    pub equilibria: Vec<CortexState>,
}

fn zero_state_instability(model: &RingModel, gain: f64) -> usize {
    let m = model
        .with_spec(model.spec().clone().with_gain(gain))
        .expect("valid gain");
    let jac = m.jacobian(&CortexState::zeros(m.n_modes()));
    spectrum_stability(&jac, 0.0).n_unstable
}

/// Gains in `(0, lambda_max]` where eigenvalues of the zero state of the
/// unforced `model` cross the imaginary axis, located by a scan of `grid`
/// points and bisection.
pub fn critical_gains(model: &RingModel, lambda_max: f64, grid: usize) -> Vec<CriticalGain> {
    let mut critical = Vec::new();
    let mut prev = zero_state_instability(model, 0.0);
    for i in 1..=grid {
        let g = lambda_max * i as f64 / grid as f64;
        let cur = zero_state_instability(model, g);
        if cur != prev {
            let (mut a, mut b) = (lambda_max * (i - 1) as f64 / grid as f64, g);
            while b - a > 1e-12 * (1.0 + b) {
                let m = 0.5 * (a + b);
                if zero_state_instability(model, m) == prev {
                    a = m;
                } else {
                    b = m;
                }
            }
            critical.push(CriticalGain {
                gain: 0.5 * (a + b),
                multiplicity: cur.abs_diff(prev),
            });
        }
        prev = cur;
    }
    critical
}

/// Seeds equilibria of the unforced model `spec` at gain `lambda_target`
/// by deforming the centered model (`μ = 0`) into the thresholded one.
pub fn homotopy_start(spec: &ModelSpec, lambda_target: f64, cfg: &ContinuationConfig) -> Result<HomotopyResult> {
    cfg.validate()?;
    let n_modes = spec.n_modes;
    let hspec = spec
        .clone()
        .with_kind(SigmoidKind::Homotopy)
        .with_mu(0.0)
        .with_gain(lambda_target);
    let model = RingModel::new(hspec.clone())?;
    let sys = GalerkinSystem::new(model.clone(), Stimulus::none(n_modes), Chart::Reflection)?;
    let base = Params::from_spec(&hspec, 0.0);

    let critical = critical_gains(&model, lambda_target, 400);

    let dim = sys.dim();
    let mut gain_branches = Vec::new();
    let mut seeds: Vec<Vec<f64>> = vec![vec![0.0; dim]];
    for cg in &critical {
        let pc = base.with(Param::Gain, cg.gain);
        let e = null_vector(&sys.jacobian(&DVector::zeros(dim), &pc, JacobianMode::Analytic));
        let mut switched = false;
        for sign in [1.0, -1.0] {
            let e = &e * sign;
            let delta = 1e-2;
            let f = |y: &DVector<f64>| {
                let u = y.rows(0, dim).into_owned();
                let mut r = DVector::zeros(dim + 1);
                r.rows_mut(0, dim)
                    .copy_from(&sys.residual(&u, &base.with(Param::Gain, y[dim])));
                r[dim] = e.dot(&u) - delta;
                r
            };
            let mut y0 = DVector::zeros(dim + 1);
            y0.rows_mut(0, dim).copy_from(&(&e * delta));
            y0[dim] = cg.gain;
            let Ok(sol) = newton_solve_with(&f, &|y: &DVector<f64>| fd_jacobian(&f, y), &y0, &cfg.newton()) else {
                continue;
            };
            let y = sol.solution;
            let u = y.rows(0, dim).into_owned();
            let mut orient = DVector::zeros(dim + 1);
            orient.rows_mut(0, dim).copy_from(&e);
            let b = continue_branch_oriented(
                &sys,
                &base.with(Param::Gain, y[dim]),
                Param::Gain,
                u.as_slice(),
                (0.0, lambda_target),
                &orient,
                cfg,
            )?;
            let mut b = b;
            b.special_points.push(SpecialPoint {
                index: 0,
                kind: SpecialKind::BranchPoint,
                params: vec![cg.gain],
            });
            for s in slice_branch(&sys, &base, Param::Gain, &b, lambda_target, cfg) {
                if s.iter().any(|v| v.abs() > 1e-8) {
                    seeds.push(s);
                }
            }
            gain_branches.push(b);
            switched = true;
        }
        if !switched {
            return Err(RingError::BranchSwitch(cg.gain));
        }
    }

    let mut mu_branches = Vec::new();
    let mut equilibria: Vec<CortexState> = Vec::new();
    for s in &seeds {
        let b = continue_branch(&sys, &base, Param::Mu, s, (0.0, 1.0), 1.0, cfg)?;
        for u in slice_branch(&sys, &base, Param::Mu, &b, 1.0, cfg) {
            let st = sys.to_state(&u);
            if !equilibria.iter().any(|e| e.distance(&st) < 1e-7) {
                equilibria.push(st);
            }
        }
        mu_branches.push(b);
    }
    Ok(HomotopyResult {
        critical_gains: critical,
        gain_branches,
        mu_branches,
        equilibria,
    })
}
