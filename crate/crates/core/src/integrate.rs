//! Fixed-step RK4 time integration of the reduced system.

use std::io::Write;

use crate::error::{Result, RingError};
use crate::galerkin::RingModel;
use crate::state::CortexState;
use crate::stimulus::{Stimulus, StimulusSource};

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CortexState>,
    pub stimulus_log: Vec<Stimulus>,
}

impl Trajectory {
    pub fn last(&self) -> &CortexState {
        self.states.last().expect("trajectory is never empty")
    }

    /// CSV with columns `t,v0,re_z1,im_z1,…,peak_angle`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, CortexState::n_modes);
        let mut header = String::from("t,v0");
        for k in 1..=n {
            header.push_str(&format!(",re_z{k},im_z{k}"));
        }
        header.push_str(",peak_angle");
        writeln!(w, "{header}")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(w, "{t},{}", s.v0)?;
            for z in &s.z {
                write!(w, ",{},{}", z.re, z.im)?;
            }
            writeln!(w, ",{}", s.peak_angle())?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record every `sample_every`-th step (the final state is always kept).
    pub sample_every: usize,
}

impl IntegrateOptions {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self {
            dt,
            t_end,
            sample_every: 1,
        }
    }

    pub fn sampled(mut self, every: usize) -> Self {
        self.sample_every = every.max(1);
        self
    }
}

/// One classical RK4 step; the stimulus is evaluated at every stage time.
pub fn rk4_step<S: StimulusSource + ?Sized>(
    model: &RingModel,
    s: &CortexState,
    src: &S,
    t: f64,
    h: f64,
) -> CortexState {
    let k1 = model.rhs(s, &src.at(t));
    let k2 = model.rhs(&s.axpy(0.5 * h, &k1), &src.at(t + 0.5 * h));
    let k3 = model.rhs(&s.axpy(0.5 * h, &k2), &src.at(t + 0.5 * h));
    let k4 = model.rhs(&s.axpy(h, &k3), &src.at(t + h));
    let mut out = s.clone();
    out.v0 += h / 6.0 * (k1.v0 + 2.0 * k2.v0 + 2.0 * k3.v0 + k4.v0);
    for i in 0..out.z.len() {
        out.z[i] += (k1.z[i] + k2.z[i] * 2.0 + k3.z[i] * 2.0 + k4.z[i]) * (h / 6.0);
    }
    out
}

pub(crate) fn step_count(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) || !(t_end > 0.0) || !dt.is_finite() || !t_end.is_finite() {
        return Err(RingError::InvalidParameter(format!(
            "need dt > 0 and t_end > 0, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let n = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((n, t_end / n as f64))
}

/// Integrates from `t = 0` to `t_end`, recording every step.
pub fn integrate<S: StimulusSource + ?Sized>(
    model: &RingModel,
    state0: &CortexState,
    src: &S,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_with(model, state0, src, IntegrateOptions::new(t_end, dt))
}

pub fn integrate_with<S: StimulusSource + ?Sized>(
    model: &RingModel,
    state0: &CortexState,
    src: &S,
    opts: IntegrateOptions,
) -> Result<Trajectory> {
    if state0.n_modes() != model.n_modes() {
        return Err(RingError::InvalidParameter(
            "state and model have different mode counts".into(),
        ));
    }
    let (n, h) = step_count(opts.t_end, opts.dt)?;
    let every = opts.sample_every.max(1);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![state0.clone()],
        stimulus_log: vec![src.at(0.0).into_owned()],
    };
    let mut s = state0.clone();
    for step in 0..n {
        let t = step as f64 * h;
        s = rk4_step(model, &s, src, t, h);
        let t_new = (step + 1) as f64 * h;
        if !s.is_finite() {
            return Err(RingError::NonFinite { t: t_new });
        }
        if (step + 1) % every == 0 || step + 1 == n {
            traj.times.push(t_new);
            traj.states.push(s.clone());
            traj.stimulus_log.push(src.at(t_new).into_owned());
        }
    }
    Ok(traj)
}

/// Outcome of [`integrate_to_rest`].
#[derive(Clone, Debug)]
pub struct RestOutcome {
    pub state: CortexState,
    pub time: f64,
    pub converged: bool,
    pub residual: f64,
}

/// Integrates a constant stimulus until `‖rhs‖∞ < tol` or `t > t_max`.
pub fn integrate_to_rest(
    model: &RingModel,
    state0: &CortexState,
    stim: &Stimulus,
    tol: f64,
    t_max: f64,
    dt: f64,
) -> Result<RestOutcome> {
    let mut s = state0.clone();
    let mut t = 0.0;
    loop {
        let r = sup_norm(&model.rhs(&s, stim));
        if r < tol {
            return Ok(RestOutcome {
                state: s,
                time: t,
                converged: true,
                residual: r,
            });
        }
        if t > t_max {
            return Ok(RestOutcome {
                state: s,
                time: t,
                converged: false,
                residual: r,
            });
        }
        for _ in 0..100 {
            s = rk4_step(model, &s, stim, t, dt);
            t += dt;
        }
        if !s.is_finite() {
            return Err(RingError::NonFinite { t });
        }
    }
}

pub(crate) fn sup_norm(d: &CortexState) -> f64 {
    d.z.iter()
        .flat_map(|z| [z.re.abs(), z.im.abs()])
        .fold(d.v0.abs(), f64::max)
}

/// Classical RK4 step for a vector field on `ℝⁿ`.
pub fn rk4_vec<F: Fn(f64, &[f64]) -> Vec<f64>>(f: &F, t: f64, y: &[f64], h: f64) -> Vec<f64> {
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, d)| x + s * d).collect() };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &add(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &add(y, &k2, 0.5 * h));
    let k4 = f(t + h, &add(y, &k3, h));
    (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;
    use num_complex::Complex64;

    #[test]
    fn rk4_is_fourth_order() {
        let spec = ModelSpec::new(-1, vec![1.5]).with_gain(15.0);
        let model = RingModel::new(spec.clone()).unwrap();
        let stim = crate::stimulus::make_lgn_stimulus(0.1, 0.3, 0.01, &spec).unwrap();
        let s0 = CortexState::new(0.1, vec![Complex64::new(0.2, 0.1)]);
        let end = |dt: f64| integrate(&model, &s0, &stim, 2.0, dt).unwrap().last().clone();
        let a = end(0.2);
        let b = end(0.1);
        let c = end(0.05);
        let ratio = a.distance(&b) / b.distance(&c);
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn times_strictly_increase() {
        let spec = ModelSpec::new(-1, vec![1.5]).with_gain(3.0);
        let model = RingModel::new(spec).unwrap();
        let tr = integrate_with(
            &model,
            &CortexState::zeros(1),
            &Stimulus::none(1),
            IntegrateOptions::new(1.03, 0.05).sampled(3),
        )
        .unwrap();
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(tr.times.len(), tr.states.len());
        assert!((tr.times.last().unwrap() - 1.03).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_steps() {
        let model = RingModel::new(ModelSpec::new(-1, vec![1.5])).unwrap();
        let s = CortexState::zeros(1);
        assert!(integrate(&model, &s, &Stimulus::none(1), 1.0, 0.0).is_err());
        assert!(integrate(&model, &s, &Stimulus::none(1), -1.0, 0.1).is_err());
    }

    #[test]
    fn csv_header() {
        let model = RingModel::new(ModelSpec::new(-1, vec![1.5, 0.5])).unwrap();
        let tr = integrate(&model, &CortexState::zeros(2), &Stimulus::none(2), 0.1, 0.05).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,v0,re_z1,im_z1,re_z2,im_z2,peak_angle\n"));
        assert_eq!(text.lines().count(), 1 + tr.times.len());
    }
}
