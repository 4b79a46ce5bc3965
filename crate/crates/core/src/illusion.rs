//! Dynamic-stimulus protocols that drive the hypercolumn into the state
//! tuned orthogonally to its input.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RingError};
use crate::galerkin::RingModel;
use crate::integrate::{integrate_to_rest, rk4_step};
use crate::model::ModelSpec;
use crate::orbit::driven::reflection_equilibria;
use crate::ring1::{n1_equilibria, Tuning, TUNED_MODULATION};
use crate::state::{angle_distance, CortexState};
use crate::stimulus::{make_lgn_stimulus, Stimulus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Stimulus orientation ramps to `angle`, holds, then snaps back.
    Rotate,
    /// `(1 - ψ) I_0 + ψ I_{π/2}` with a linear ramp of `ψ`.
    Mixture,
    /// Constant stimulus at the reference orientation.
    Static,
}

/// Schedule parameters, in units of `τ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Timeline {
    /// Duration of the orientation ramp (rotate).
    pub ramp_duration: f64,
    /// Time at which the orientation snaps back (rotate).
    pub switch_back: f64,
    /// Orientation reached by the ramp (rotate).
    pub angle: f64,
    /// `ψ` leaves 0 here (mixture).
    pub psi_start: f64,
    /// `ψ` reaches 1 here (mixture); equal to `psi_start` for a jump.
    pub psi_end: f64,
    /// Final value of `ψ` (mixture); 0 keeps the first stimulus.
    pub psi_final: f64,
    /// Reference orientation added to every stimulus angle.
    pub offset: f64,
}

impl Default for Timeline {
    fn default() -> Self {
        Self {
            ramp_duration: 1000.0,
            switch_back: 2.0e4,
            angle: FRAC_PI_2,
            psi_start: 1000.0,
            psi_end: 1.0e4,
            psi_final: 1.0,
            offset: 0.0,
        }
    }
}

/// Where a protocol starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// Zero voltage.
    Zero,
    /// The stable state peaked with the stimulus at the reference orientation.
    Tc0,
    Custom(CortexState),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub model: ModelSpec,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_contrast")]
    pub contrast: f64,
    #[serde(default)]
    pub timeline: Timeline,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Steps between phase-track samples.
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    #[serde(default = "default_initial")]
    pub initial: InitialCondition,
    /// Check that both tuned states are stable before running.
    #[serde(default = "default_true")]
    pub preflight: bool,
}

fn default_beta() -> f64 {
    0.1
}
fn default_contrast() -> f64 {
    0.01
}
fn default_t_end() -> f64 {
    2.5e4
}
fn default_dt() -> f64 {
    0.1
}
fn default_sample_every() -> usize {
    100
}
fn default_initial() -> InitialCondition {
    InitialCondition::Tc0
}
fn default_true() -> bool {
    true
}

impl Scenario {
    /// Rotate protocol at the bistable single-mode parameters.
    pub fn rotate_default() -> Self {
        Self {
            kind: ScenarioKind::Rotate,
            model: ModelSpec::new(-1, vec![1.5]).with_gain(15.0),
            beta: default_beta(),
            contrast: default_contrast(),
            timeline: Timeline::default(),
            t_end: default_t_end(),
            dt: default_dt(),
            sample_every: default_sample_every(),
            initial: InitialCondition::Tc0,
            preflight: true,
        }
    }

    /// Mixture protocol at the same parameters, starting from rest.
    pub fn mixture_default() -> Self {
        Self {
            kind: ScenarioKind::Mixture,
            t_end: 2.0e4,
            initial: InitialCondition::Zero,
            ..Self::rotate_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let bad = |m: &str| Err(RingError::InvalidParameter(m.into()));
        let tl = &self.timeline;
        if !(0.0..=1.0).contains(&self.beta) {
            return bad("beta must lie in [0, 1]");
        }
        if !(self.contrast >= 0.0 && self.contrast.is_finite()) {
            return bad("contrast must be finite and >= 0");
        }
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.dt.is_finite() && self.t_end.is_finite()) {
            return bad("dt and t_end must be positive");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be positive");
        }
        if ![
            tl.ramp_duration,
            tl.switch_back,
            tl.angle,
            tl.psi_start,
            tl.psi_end,
            tl.psi_final,
            tl.offset,
        ]
        .iter()
        .all(|v| v.is_finite())
        {
            return bad("timeline values must be finite");
        }
        match self.kind {
            ScenarioKind::Rotate => {
                if tl.ramp_duration < 0.0 {
                    return bad("ramp_duration must be >= 0");
                }
                if tl.switch_back <= tl.ramp_duration {
                    return bad("switch_back must come after the ramp");
                }
            }
            ScenarioKind::Mixture => {
                if tl.psi_start < 0.0 || tl.psi_end < tl.psi_start {
                    return bad("need 0 <= psi_start <= psi_end");
                }
                if !(0.0..=1.0).contains(&tl.psi_final) {
                    return bad("psi_final must lie in [0, 1]");
                }
            }
            ScenarioKind::Static => {}
        }
        if let InitialCondition::Custom(s) = &self.initial {
            if s.n_modes() != self.model.n_modes || !s.is_finite() {
                return bad("custom initial state does not match the model");
            }
        }
        Ok(())
    }

    fn lgn(&self, x0: f64) -> Stimulus {
        make_lgn_stimulus(self.beta, x0, self.contrast, &self.model).expect("validated stimulus")
    }

    /// Stimulus orientation of the rotate schedule at time `t`.
    pub fn rotate_angle(&self, t: f64) -> f64 {
        let tl = &self.timeline;
        let a = if t > tl.switch_back {
            0.0
        } else if tl.ramp_duration == 0.0 {
            tl.angle
        } else {
            tl.angle * (t / tl.ramp_duration).min(1.0)
        };
        a + tl.offset
    }

    /// Mixture weight `ψ(t)`.
    pub fn psi(&self, t: f64) -> f64 {
        let tl = &self.timeline;
        if t < tl.psi_start {
            0.0
        } else if t >= tl.psi_end {
            tl.psi_final
        } else {
            tl.psi_final * (t - tl.psi_start) / (tl.psi_end - tl.psi_start)
        }
    }

    /// The stimulus presented at time `t`.
    pub fn stimulus_at(&self, t: f64) -> Stimulus {
        let off = self.timeline.offset;
        match self.kind {
            ScenarioKind::Rotate => self.lgn(self.rotate_angle(t)),
            ScenarioKind::Mixture => self.lgn(off).blend(&self.lgn(off + FRAC_PI_2), self.psi(t)),
            ScenarioKind::Static => self.lgn(off),
        }
    }

    /// Orientation at which the final stimulus peaks.
    pub fn final_stimulus_angle(&self) -> f64 {
        let off = self.timeline.offset;
        match self.kind {
            ScenarioKind::Rotate => self.rotate_angle(self.t_end),
            ScenarioKind::Mixture if self.psi(self.t_end) > 0.5 => off + FRAC_PI_2,
            _ => off,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basin {
    /// Tuned at the reference orientation.
    Tc0,
    /// Tuned orthogonally to the reference orientation.
    Tc90,
    Untuned,
    /// Not at rest, or tuned at neither orientation.
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub final_peak_angle: f64,
    pub final_stimulus_angle: f64,
    pub basin: Basin,
    /// `(t, φ)` with `φ = ½ arg z₁` unwrapped.
    pub phase_track: Vec<(f64, f64)>,
    /// Samples at which `|z₁|` came too close to 0 for a meaningful phase.
    pub phase_gaps: Vec<f64>,
    pub illusion_detected: bool,
    pub final_state: CortexState,
}

/// `|z₁|` below which the phase is not tracked.
const PHASE_FLOOR: f64 = 1e-8;

/// Label of a state by its modulation and first-mode peak angle, relative
/// to `reference`.
pub fn label_state(state: &CortexState, spec: &ModelSpec, reference: f64) -> Basin {
    let modulation = spec.gain * spec.sqrt_magnitude(1) * state.z[0].norm();
    if modulation < TUNED_MODULATION {
        return Basin::Untuned;
    }
    let phi = state.peak_angle();
    if angle_distance(phi, reference) <= FRAC_PI_8 {
        Basin::Tc0
    } else if angle_distance(phi, reference + FRAC_PI_2) <= FRAC_PI_8 {
        Basin::Tc90
    } else {
        Basin::Undecided
    }
}

/// Stable tuned equilibria for a constant stimulus; fails unless one is
/// peaked with the stimulus and one orthogonally (stability within the
/// reflection-symmetric subspace).
pub fn bistable_pair(model: &RingModel, stim: &Stimulus) -> Result<(CortexState, CortexState)> {
    let spec = model.spec();
    let (tc0, tc90) = if spec.n_modes == 1 {
        let eq = n1_equilibria(spec, stim, 24)?;
        let find = |t: Tuning| {
            eq.iter()
                .find(|e| e.tuning == t && e.chart_stability.stable())
                .map(|e| e.state())
        };
        (find(Tuning::Tc0), find(Tuning::Tc90))
    } else {
        let eq = reflection_equilibria(model, stim, 5)?;
        let find = |basin: Basin| {
            eq.iter()
                .find(|e| e.chart_stability.stable() && label_state(&e.state, spec, 0.0) == basin)
                .map(|e| e.state.clone())
        };
        (find(Basin::Tc0), find(Basin::Tc90))
    };
    match (tc0, tc90) {
        (Some(a), Some(b)) => Ok((a, b)),
        (None, _) => Err(RingError::NotBistable("no stable state tuned with the stimulus".into())),
        (_, None) => Err(RingError::NotBistable("no stable state tuned orthogonally".into())),
    }
}

fn initial_state(scn: &Scenario, model: &RingModel) -> Result<CortexState> {
    let off = scn.timeline.offset;
    Ok(match &scn.initial {
        InitialCondition::Zero => CortexState::zeros(scn.model.n_modes),
        InitialCondition::Custom(s) => s.clone(),
        InitialCondition::Tc0 => bistable_pair(model, &scn.lgn(0.0))?.0.group_act(off, false),
    })
}

/// Runs any scenario with a fixed-step RK4 integrator.
pub fn run_scenario(scn: &Scenario) -> Result<OutcomeReport> {
    scn.validate()?;
    let model = RingModel::new(scn.model.clone())?;
    if scn.preflight {
        bistable_pair(&model, &scn.lgn(0.0))?;
    }
    let mut s = initial_state(scn, &model)?;
    let n = (scn.t_end / scn.dt).ceil() as usize;
    let h = scn.t_end / n as f64;
    let src = crate::stimulus::Scheduled(|t: f64| scn.stimulus_at(t));

    let mut track = Vec::with_capacity(n / scn.sample_every + 2);
    let mut gaps = Vec::new();
    let mut last_arg: Option<f64> = None;
    let mut unwrapped = 0.0;
    let mut record = |t: f64, s: &CortexState, track: &mut Vec<(f64, f64)>| {
        let z = s.z[0];
        if z.norm() < PHASE_FLOOR {
            gaps.push(t);
            return;
        }
        let a = z.arg();
        match last_arg {
            None => unwrapped = a,
            Some(prev) => {
                let mut d = a - prev;
                d -= 2.0 * PI * (d / (2.0 * PI)).round();
                unwrapped += d;
            }
        }
        last_arg = Some(a);
        track.push((t, 0.5 * unwrapped));
    };
    record(0.0, &s, &mut track);
    for i in 0..n {
        let t = i as f64 * h;
        s = rk4_step(&model, &s, &src, t, h);
        if !s.is_finite() {
            return Err(RingError::NonFinite { t: t + h });
        }
        if (i + 1) % scn.sample_every == 0 || i + 1 == n {
            record((i + 1) as f64 * h, &s, &mut track);
        }
    }
    let off = scn.timeline.offset;
    let final_stimulus_angle = scn.final_stimulus_angle();
    let basin = label_state(&s, &scn.model, off);
    let final_peak_angle = s.peak_angle();
    let illusion_detected =
        basin != Basin::Untuned && angle_distance(final_peak_angle, final_stimulus_angle + FRAC_PI_2) <= FRAC_PI_8;
    Ok(OutcomeReport {
        final_peak_angle,
        final_stimulus_angle,
        basin,
        phase_track: track,
        phase_gaps: gaps,
        illusion_detected,
        final_state: s,
    })
}

/// Rotate-and-snap protocol.
pub fn rotate_protocol(scn: &Scenario) -> Result<OutcomeReport> {
    if scn.kind != ScenarioKind::Rotate {
        return Err(RingError::InvalidParameter("expected a rotate scenario".into()));
    }
    run_scenario(scn)
}

/// Contrast-mixture protocol.
pub fn mixture_protocol(scn: &Scenario) -> Result<OutcomeReport> {
    if scn.kind != ScenarioKind::Mixture {
        return Err(RingError::InvalidParameter("expected a mixture scenario".into()));
    }
    run_scenario(scn)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinConfig {
    pub tol: f64,
    pub t_max: f64,
    pub dt: f64,
    /// Matching radius in `(v₀, |z_k|)`.
    pub radius: f64,
}

impl Default for BasinConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            t_max: 1.0e5,
            dt: 0.1,
            radius: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinOutcome {
    pub basin: Basin,
    pub rest: CortexState,
    pub time: f64,
    pub converged: bool,
    /// Index into the reference equilibria.
    pub matched: Option<usize>,
}

fn orbit_distance(a: &CortexState, b: &CortexState) -> f64 {
    a.z.iter()
        .zip(&b.z)
        .map(|(x, y)| (x.norm() - y.norm()).abs())
        .fold((a.v0 - b.v0).abs(), f64::max)
}

/// Integrates to rest under the constant `stim` and labels the resting
/// state. `refs` are known equilibria; when non-empty the rest state must
/// match one of them (up to rotation) within `cfg.radius`.
pub fn classify_basin(
    state: &CortexState,
    model: &RingModel,
    stim: &Stimulus,
    refs: &[CortexState],
    reference_angle: f64,
    cfg: &BasinConfig,
) -> Result<BasinOutcome> {
    let rest = integrate_to_rest(model, state, stim, cfg.tol, cfg.t_max, cfg.dt)?;
    let mut out = BasinOutcome {
        basin: Basin::Undecided,
        rest: rest.state.clone(),
        time: rest.time,
        converged: rest.converged,
        matched: None,
    };
    if !rest.converged {
        return Ok(out);
    }
    if !refs.is_empty() {
        let best = refs
            .iter()
            .enumerate()
            .map(|(i, r)| (i, orbit_distance(r, &rest.state)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, d)) if d <= cfg.radius => out.matched = Some(i),
            _ => return Ok(out),
        }
    }
    out.basin = label_state(&rest.state, model.spec(), reference_angle);
    Ok(out)
}

/// Outcome of the rotate protocol for each ramp duration, in parallel.
pub fn ramp_scan(base: &Scenario, durations: &[f64]) -> Result<Vec<(f64, OutcomeReport)>> {
    if durations.is_empty() {
        return Err(RingError::EmptyGrid("ramp durations"));
    }
    durations
        .par_iter()
        .map(|&d| {
            let mut s = base.clone();
            s.kind = ScenarioKind::Rotate;
            s.timeline.ramp_duration = d;
            run_scenario(&s).map(|r| (d, r))
        })
        .collect()
}

/// Shortest ramp duration in `[lo, hi]` that still produces the illusion,
/// by bisection to `tol`; `None` unless the outcome differs at the ends.
pub fn critical_ramp_duration(base: &Scenario, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>> {
    let run = |d: f64| -> Result<bool> {
        let mut s = base.clone();
        s.kind = ScenarioKind::Rotate;
        s.timeline.ramp_duration = d;
        Ok(run_scenario(&s)?.illusion_detected)
    };
    let (mut a, mut b) = (lo, hi);
    if run(a)? || !run(b)? {
        return Ok(None);
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if run(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(Some(b))
}
