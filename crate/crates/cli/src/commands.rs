//! Command implementations. Each writes its files under `out` and returns
//! their paths relative to it.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use ring_core::continuation::{continue_branch, fold_locus, Branch, ContinuationConfig};
use ring_core::illusion::{ramp_scan, run_scenario, Basin, ScenarioKind};
use ring_core::integrate::{integrate_with, IntegrateOptions};
use ring_core::io::{plot_script, write_branch, write_json, write_table, write_with, PlotSpec};
use ring_core::orbit::{
    chebyshev_fit, driven_pair, orbit_skeleton, reduce_invariants, reflection_equilibria, OrbitSystem,
};
use ring_core::ring1::{
    n1_equilibria, pitchfork_condition, state_halfwidth, threshold_boundary, Parity, PolarSystem, Tuning,
};
use ring_core::solve::{newton_solve_with, JacobianMode, NewtonConfig};
use ring_core::state::{reconstruct_activity, wrap_angle};
use ring_core::systems::{stability, Chart, EquilibriumSystem, GalerkinSystem, Param, Params};
use ring_core::{CortexState, ModelSpec, Result, RingError, RingModel, Stimulus};

use crate::config::*;

pub type Outputs = Vec<String>;

fn plot(out: &Path, name: &str, specs: &[PlotSpec], outputs: &mut Outputs) -> Result<()> {
    let file = format!("plot_{name}.py");
    let script = plot_script(specs, name);
    write_with(&out.join(&file), |w| w.write_all(script.as_bytes()))?;
    outputs.push(file);
    Ok(())
}

fn line(csv: &str, x: &str, ys: &[&str], title: &str) -> PlotSpec {
    PlotSpec {
        csv: csv.into(),
        x: x.into(),
        ys: ys.iter().map(|s| s.to_string()).collect(),
        title: title.into(),
        logx: false,
    }
}

pub fn simulate(cfg: &SimulateConfig, out: &Path) -> Result<Outputs> {
    let model = RingModel::new(cfg.model.clone())?;
    let stim = cfg.stimulus.build(&cfg.model)?;
    let s0 = cfg
        .initial
        .clone()
        .unwrap_or_else(|| CortexState::zeros(cfg.model.n_modes));
    let opts = IntegrateOptions::new(cfg.t_end, cfg.dt).sampled(cfg.sample_every);
    let traj = integrate_with(&model, &s0, &stim, opts)?;
    write_with(&out.join("trajectory.csv"), |w| traj.write_csv(w))?;
    let mut outputs = vec!["trajectory.csv".to_string()];
    plot(
        out,
        "simulate",
        &[line("trajectory.csv", "t", &["v0", "re_z1", "im_z1"], "trajectory")],
        &mut outputs,
    )?;
    Ok(outputs)
}

#[derive(Serialize)]
struct EquilibriumRecord {
    state: CortexState,
    residual: f64,
    peak_angle: f64,
    chart_unstable: usize,
    full_unstable: usize,
    leading_real: f64,
}

pub fn equilibria(cfg: &EquilibriaConfig, out: &Path) -> Result<Outputs> {
    let model = RingModel::new(cfg.model.clone())?;
    let stim = cfg.stimulus.build(&cfg.model)?;
    if cfg.chart == Chart::Reflection && !stim.is_reflection_symmetric() {
        return Err(RingError::InvalidParameter(
            "the reflection chart needs a stimulus peaked at x0 = 0".into(),
        ));
    }
    let sys = GalerkinSystem::new(model.clone(), stim.clone(), cfg.chart)?;
    let p = Params::from_spec(&cfg.model, stim.contrast);
    let n = cfg.model.n_modes;
    let mut seeds = cfg.seeds.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let r = cfg.model.sqrt_magnitude(1).max(0.5);
    for _ in 0..cfg.random_seeds {
        let z = (0..n)
            .map(|_| Complex64::new(rng.random_range(-r..r), rng.random_range(-r..r)))
            .collect();
        seeds.push(CortexState::new(rng.random_range(-1.5..1.5), z));
    }
    let newton = NewtonConfig {
        tol: cfg.newton_tol,
        ..NewtonConfig::default()
    };
    let mut found: Vec<CortexState> = Vec::new();
    for s in &seeds {
        if s.n_modes() != n {
            return Err(RingError::InvalidParameter("seed has the wrong number of modes".into()));
        }
        let u0 = DVector::from_vec(sys.from_state(s));
        let res = newton_solve_with(
            &|u: &DVector<f64>| sys.residual(u, &p),
            &|u: &DVector<f64>| sys.jacobian(u, &p, JacobianMode::Analytic),
            &u0,
            &newton,
        );
        if let Ok(o) = res {
            let st = sys.to_state(o.solution.as_slice());
            if st.is_finite() && !found.iter().any(|f| f.distance(&st) < 1e-7) {
                found.push(st);
            }
        }
    }
    if found.is_empty() {
        return Err(RingError::NewtonDiverged {
            iterations: newton.max_iters,
            residual: f64::NAN,
        });
    }
    found.sort_by(|a, b| a.v0.total_cmp(&b.v0));
    let mut records = Vec::new();
    for st in found {
        let u = DVector::from_vec(sys.from_state(&st));
        let jac = sys.jacobian(&u, &p, JacobianMode::Analytic);
        let chart = sys.stability(&u, &p, &jac);
        let full = stability(&st, &stim, &model, 1e-8)?;
        records.push(EquilibriumRecord {
            residual: sys.residual(&u, &p).amax(),
            peak_angle: st.peak_angle(),
            chart_unstable: chart.n_unstable,
            full_unstable: full.n_unstable,
            leading_real: full.leading_real,
            state: st,
        });
    }
    let mut cols = vec!["v0".to_string()];
    for k in 1..=n {
        cols.push(format!("re_z{k}"));
        cols.push(format!("im_z{k}"));
    }
    cols.extend(["peak_angle", "chart_unstable", "full_unstable"].map(String::from));
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            let mut row = r.state.to_real();
            row.extend([r.peak_angle, r.chart_unstable as f64, r.full_unstable as f64]);
            row
        })
        .collect();
    let names: Vec<&str> = cols.iter().map(String::as_str).collect();
    write_table(&out.join("equilibria.csv"), &names, &rows)?;
    write_json(&out.join("equilibria.json"), &records)?;
    Ok(vec!["equilibria.csv".into(), "equilibria.json".into()])
}

fn polar_start(spec: &ModelSpec, stim: &Stimulus, parity: Parity, tuning: Tuning) -> Result<Vec<f64>> {
    let eq = n1_equilibria(spec, stim, 24)?;
    let e = eq
        .iter()
        .find(|e| e.tuning == tuning)
        .ok_or_else(|| RingError::InvalidParameter(format!("no {tuning:?} equilibrium at gain {}", spec.gain)))?;
    Ok(vec![e.v0, parity.sign() * e.rho])
}

fn branch_plot(stem: &str, b: &Branch) -> PlotSpec {
    let ys: Vec<&str> = b.state_names.iter().map(String::as_str).collect();
    line(&format!("{stem}.csv"), &b.param_names[0], &ys, stem)
}

pub fn continue_cmd(cfg: &ContinueConfig, out: &Path) -> Result<Outputs> {
    let stim = cfg.stimulus.build(&cfg.model)?;
    let base = Params::from_spec(&cfg.model, stim.contrast);
    let mut outputs = Vec::new();
    let mut plots = Vec::new();
    let mut emit = |stem: &str, b: &Branch, outputs: &mut Outputs| -> Result<()> {
        write_branch(out, stem, b)?;
        outputs.push(format!("{stem}.csv"));
        outputs.push(format!("{stem}.json"));
        plots.push(branch_plot(stem, b));
        Ok(())
    };
    match &cfg.system {
        SystemConfig::Polar { parity, start } => {
            let sys = PolarSystem::new(&cfg.model, &stim, *parity)?;
            let u0 = polar_start(&cfg.model, &stim, *parity, *start)?;
            let b = continue_branch(&sys, &base, cfg.param, &u0, cfg.range, cfg.direction, &cfg.continuation)?;
            emit("branch", &b, &mut outputs)?;
        }
        SystemConfig::Galerkin { chart, start } => {
            let sys = GalerkinSystem::new(RingModel::new(cfg.model.clone())?, stim.clone(), *chart)?;
            if start.n_modes() != cfg.model.n_modes {
                return Err(RingError::InvalidParameter(
                    "start state has the wrong number of modes".into(),
                ));
            }
            let u0 = sys.from_state(start);
            let b = continue_branch(&sys, &base, cfg.param, &u0, cfg.range, cfg.direction, &cfg.continuation)?;
            emit("branch", &b, &mut outputs)?;
        }
        SystemConfig::OrbitSkeleton {
            alpha,
            max_fit_error,
            lambda_max,
            delta,
        } => {
            if cfg.param != Param::Gain {
                return Err(RingError::InvalidParameter(
                    "the skeleton is continued in the gain".into(),
                ));
            }
            let series = Arc::new(chebyshev_fit(cfg.model.sigmoid_kind, *alpha, *max_fit_error)?);
            let sys = OrbitSystem::new(cfg.model.clone(), series, stim.contrast * stim.i0)?;
            let sk = orbit_skeleton(&sys, *lambda_max, *delta, &cfg.continuation)?;
            emit("trivial", &sk.trivial.branch, &mut outputs)?;
            for b in &sk.branches {
                emit(&format!("mode{}", b.mode), &b.branch, &mut outputs)?;
            }
            write_json(&out.join("critical_gains.json"), &sk.critical_gains)?;
            outputs.push("critical_gains.json".into());
        }
    }
    plot(out, "continue", &plots, &mut outputs)?;
    Ok(outputs)
}

#[derive(Serialize)]
struct FoldSummary {
    fold_gain: f64,
    pitchfork_gain: Option<f64>,
    zero_contrast_limit: Option<f64>,
}

pub fn fold_locus_cmd(cfg: &FoldLocusConfig, out: &Path) -> Result<Outputs> {
    let stim = cfg.stimulus.build(&cfg.model)?;
    let sys = PolarSystem::new(&cfg.model, &stim, Parity::Odd)?;
    let base = Params::from_spec(&cfg.model, stim.contrast);
    let u0 = polar_start(&cfg.model, &stim, Parity::Odd, Tuning::Tc90)?;
    let b = continue_branch(
        &sys,
        &base,
        Param::Gain,
        &u0,
        (0.0, cfg.model.gain + 5.0),
        -1.0,
        &cfg.continuation,
    )?;
    let f = b
        .folds()
        .next()
        .ok_or_else(|| RingError::NotBistable("the orthogonal family has no fold".into()))?;
    let mut outputs = Vec::new();
    let mut limit = None;
    for (stem, dir) in [("locus_down", -1.0), ("locus_up", 1.0)] {
        let fl = fold_locus(
            &sys,
            &base,
            &f.state,
            Param::Contrast,
            Param::Gain,
            f.params[0],
            cfg.range,
            dir,
            &cfg.continuation,
        )?;
        if let Some(z) = fl.zero_crossings.first() {
            limit.get_or_insert(z.params[1]);
        }
        write_branch(out, stem, &fl.branch)?;
        outputs.push(format!("{stem}.csv"));
        outputs.push(format!("{stem}.json"));
    }
    let summary = FoldSummary {
        fold_gain: f.params[0],
        pitchfork_gain: pitchfork_condition(cfg.model.magnitude(1), cfg.model.threshold, cfg.model.eps0()).map(|p| p.0),
        zero_contrast_limit: limit,
    };
    write_json(&out.join("fold_summary.json"), &summary)?;
    outputs.push("fold_summary.json".into());
    let specs = [
        line(
            "locus_down.csv",
            "epsilon",
            &["lambda"],
            "fold locus (decreasing contrast)",
        ),
        line(
            "locus_up.csv",
            "epsilon",
            &["lambda"],
            "fold locus (increasing contrast)",
        ),
    ];
    plot(out, "fold_locus", &specs, &mut outputs)?;
    Ok(outputs)
}

pub fn threshold_map(cfg: &ThresholdMapConfig, out: &Path) -> Result<Outputs> {
    if !(cfg.j1_step > 0.0 && cfg.j1_max > 0.0) {
        return Err(RingError::InvalidParameter(
            "j1_step and j1_max must be positive".into(),
        ));
    }
    let n = (cfg.j1_max / cfg.j1_step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 * cfg.j1_step).collect();
    let tb = threshold_boundary(cfg.eps0, &cfg.thetas, &grid, cfg.lambda_max)?;
    write_with(&out.join("threshold.csv"), |w| tb.write_csv(w))?;
    let mut outputs = vec!["threshold.csv".to_string()];
    plot(
        out,
        "threshold_map",
        &[line("threshold.csv", "theta", &["j1_min"], "tuning threshold")],
        &mut outputs,
    )?;
    Ok(outputs)
}

pub fn orbit_reduce(cfg: &OrbitReduceConfig, out: &Path) -> Result<Outputs> {
    cfg.model.validate()?;
    let series = chebyshev_fit(cfg.model.sigmoid_kind, cfg.alpha, cfg.max_fit_error)?;
    let inv = reduce_invariants(&series, &cfg.model)?;
    write_with(&out.join("invariants.json"), |w| {
        writeln!(w, "{}", inv.to_json().map_err(std::io::Error::other)?)
    })?;
    write_json(&out.join("chebyshev.json"), &series)?;
    Ok(vec!["invariants.json".into(), "chebyshev.json".into()])
}

#[derive(Serialize)]
struct CurveSummary {
    state: CortexState,
    gain: f64,
    peak_angle: f64,
    halfwidth: Option<f64>,
}

pub fn tuning_curve(cfg: &TuningCurveConfig, out: &Path) -> Result<Outputs> {
    if cfg.points < 2 {
        return Err(RingError::InvalidParameter("need at least two points".into()));
    }
    let mut spec = cfg.model.clone();
    let stim = cfg.stimulus.build(&spec)?;
    let states: Vec<CortexState> = if !cfg.states.is_empty() {
        cfg.states.clone()
    } else if spec.n_modes == 1 {
        n1_equilibria(&spec, &stim, 24)?.iter().map(|e| e.state()).collect()
    } else {
        let model = RingModel::new(spec.clone())?;
        match cfg.near_fold {
            Some(factor) => {
                let pair = driven_pair(&model, &stim, spec.gain, factor, &ContinuationConfig::default())?;
                spec.gain = pair.gain;
                pair.all.into_iter().map(|e| e.state).collect()
            }
            None => reflection_equilibria(&model, &stim, 5)?
                .into_iter()
                .map(|e| e.state)
                .collect(),
        }
    };
    if states.iter().any(|s| s.n_modes() != spec.n_modes) {
        return Err(RingError::InvalidParameter(
            "state has the wrong number of modes".into(),
        ));
    }
    let xs: Vec<f64> = (0..cfg.points)
        .map(|j| -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * j as f64 / cfg.points as f64)
        .collect();
    let mut cols = vec!["x".to_string()];
    cols.extend((0..states.len()).map(|i| format!("activity_{i}")));
    let rows: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| {
            let mut r = vec![x];
            r.extend(states.iter().map(|s| reconstruct_activity(s, &spec, x)));
            r
        })
        .collect();
    let names: Vec<&str> = cols.iter().map(String::as_str).collect();
    write_table(&out.join("tuning.csv"), &names, &rows)?;
    let summary: Vec<CurveSummary> = states
        .iter()
        .map(|s| CurveSummary {
            state: s.clone(),
            gain: spec.gain,
            peak_angle: wrap_angle(s.peak_angle()),
            halfwidth: if spec.n_modes == 1 {
                state_halfwidth(s, &spec)
            } else {
                None
            },
        })
        .collect();
    write_json(&out.join("tuning.json"), &summary)?;
    let mut outputs = vec!["tuning.csv".to_string(), "tuning.json".to_string()];
    plot(
        out,
        "tuning_curve",
        &[line("tuning.csv", "x", &names[1..], "tuning curves")],
        &mut outputs,
    )?;
    Ok(outputs)
}

fn basin_code(b: Basin) -> f64 {
    match b {
        Basin::Tc0 => 0.0,
        Basin::Tc90 => 1.0,
        Basin::Untuned => 2.0,
        Basin::Undecided => 3.0,
    }
}

pub fn illusion(cfg: &IllusionConfig, out: &Path) -> Result<Outputs> {
    let scn = &cfg.scenario;
    let report = run_scenario(scn)?;
    let rows: Vec<Vec<f64>> = report
        .phase_track
        .iter()
        .map(|&(t, phi)| {
            let stim_angle = match scn.kind {
                ScenarioKind::Rotate => scn.rotate_angle(t),
                ScenarioKind::Mixture => scn.psi(t),
                ScenarioKind::Static => scn.timeline.offset,
            };
            vec![t, phi, stim_angle]
        })
        .collect();
    let drive = match scn.kind {
        ScenarioKind::Mixture => "psi",
        _ => "stimulus_angle",
    };
    write_table(&out.join("phase_track.csv"), &["t", "peak_angle", drive], &rows)?;
    write_json(&out.join("report.json"), &report)?;
    let mut outputs = vec!["phase_track.csv".to_string(), "report.json".to_string()];
    if !cfg.ramp_scan.is_empty() {
        let scan = ramp_scan(scn, &cfg.ramp_scan)?;
        let rows: Vec<Vec<f64>> = scan
            .iter()
            .map(|(d, r)| {
                vec![
                    *d,
                    basin_code(r.basin),
                    r.illusion_detected as u8 as f64,
                    r.final_peak_angle,
                ]
            })
            .collect();
        write_table(
            &out.join("ramp_scan.csv"),
            &["ramp_duration", "basin", "illusion", "final_peak_angle"],
            &rows,
        )?;
        outputs.push("ramp_scan.csv".into());
    }
    plot(
        out,
        "illusion",
        &[line("phase_track.csv", "t", &["peak_angle", drive], "peak orientation")],
        &mut outputs,
    )?;
    Ok(outputs)
}
