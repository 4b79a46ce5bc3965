use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ring_core::continuation::{continue_branch, ContinuationConfig};
use ring_core::illusion::{
    bistable_pair, classify_basin, critical_ramp_duration, label_state, mixture_protocol, ramp_scan, rotate_protocol,
    run_scenario, Basin, BasinConfig, InitialCondition, Scenario, ScenarioKind,
};
use ring_core::io::{check_csv_file, write_branch, write_table};
use ring_core::ring1::{n1_equilibria, Parity, PolarSystem, Tuning};
use ring_core::state::angle_distance;
use ring_core::stimulus::make_lgn_stimulus;
use ring_core::systems::{Param, Params};
use ring_core::{CortexState, ModelSpec, RingModel, Stimulus};

fn scratch_dir(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("ring-core-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn rotate_schedule_leaves_the_bump_orthogonal() {
    let scn = Scenario::rotate_default();
    assert_eq!(scn.rotate_angle(500.0), FRAC_PI_2 / 2.0);
    assert_eq!(scn.rotate_angle(1500.0), FRAC_PI_2);
    assert_eq!(scn.rotate_angle(2.0e4 + 1.0), 0.0);
    let r = rotate_protocol(&scn).unwrap();
    assert_eq!(r.basin, Basin::Tc90);
    assert!(r.illusion_detected);
    assert_eq!(r.final_stimulus_angle, 0.0);
    assert!(angle_distance(r.final_peak_angle, FRAC_PI_2) < 1e-3);
    assert!(r.phase_gaps.is_empty());
    // the phase follows the ramp without jumps
    let max_jump = r
        .phase_track
        .windows(2)
        .map(|w| (w[1].1 - w[0].1).abs())
        .fold(0.0, f64::max);
    assert!(max_jump < 0.1, "{max_jump}");
}

#[test]
fn slow_mixture_keeps_the_first_orientation() {
    let scn = Scenario::mixture_default();
    let r = mixture_protocol(&scn).unwrap();
    assert_eq!(r.final_stimulus_angle, FRAC_PI_2);
    assert_eq!(r.basin, Basin::Tc0);
    assert!(r.illusion_detected);
}

#[test]
fn constant_stimulus_controls() {
    let mut still = Scenario::rotate_default();
    still.timeline.angle = 0.0;
    still.t_end = 3000.0;
    let r = run_scenario(&still).unwrap();
    assert_eq!(r.basin, Basin::Tc0);
    assert!(!r.illusion_detected);

    let mut none = Scenario::mixture_default();
    none.timeline.psi_final = 0.0;
    none.t_end = 5000.0;
    assert_eq!(run_scenario(&none).unwrap().basin, Basin::Tc0);

    let mut jump = Scenario::mixture_default();
    jump.timeline.psi_start = 0.0;
    jump.timeline.psi_end = 0.0;
    jump.t_end = 5000.0;
    let r = run_scenario(&jump).unwrap();
    assert_eq!(r.basin, Basin::Tc90);
    assert!(!r.illusion_detected);
}

#[test]
fn protocols_are_bit_reproducible() {
    let mut scn = Scenario::rotate_default();
    scn.t_end = 4000.0;
    let a = run_scenario(&scn).unwrap();
    let b = run_scenario(&scn).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.final_state.v0.to_bits(), b.final_state.v0.to_bits());
    let json = serde_json::to_string(&a).unwrap();
    assert_eq!(json, serde_json::to_string(&b).unwrap());
}

#[test]
fn shifted_angles_give_shifted_reports() {
    let mut base = Scenario::rotate_default();
    base.t_end = 2.2e4;
    let r0 = run_scenario(&base).unwrap();
    for delta in [0.3, -1.1] {
        let mut s = base.clone();
        s.timeline.offset = delta;
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.basin, r0.basin);
        assert_eq!(r.illusion_detected, r0.illusion_detected);
        assert!(angle_distance(r.final_peak_angle, r0.final_peak_angle + delta) <= 1e-6);
        assert!(angle_distance(r.final_stimulus_angle, r0.final_stimulus_angle + delta) <= 1e-6);
        for (p, q) in r.phase_track.iter().zip(&r0.phase_track) {
            assert_eq!(p.0, q.0);
            assert!(angle_distance(p.1, q.1 + delta) <= 1e-6);
        }
    }
}

#[test]
fn preflight_rejects_monostable_models() {
    let mut scn = Scenario::rotate_default();
    scn.model = scn.model.with_gain(4.0);
    assert!(run_scenario(&scn).is_err());
    scn.preflight = false;
    scn.initial = InitialCondition::Zero;
    scn.t_end = 100.0;
    assert!(run_scenario(&scn).is_ok());
    assert!(mixture_protocol(&Scenario::rotate_default()).is_err());
    assert!(rotate_protocol(&Scenario::mixture_default()).is_err());
}

#[test]
fn validation() {
    let mut s = Scenario::rotate_default();
    s.timeline.switch_back = 500.0;
    assert!(s.validate().is_err());
    let mut s = Scenario::mixture_default();
    s.timeline.psi_end = 10.0;
    assert!(s.validate().is_err());
    let mut s = Scenario::rotate_default();
    s.initial = InitialCondition::Custom(CortexState::zeros(2));
    assert!(s.validate().is_err());
    let mut s = Scenario::rotate_default();
    s.dt = f64::NAN;
    assert!(s.validate().is_err());
}

#[test]
fn scenario_json_is_strict() {
    let s = Scenario::rotate_default();
    let json = serde_json::to_value(&s).unwrap();
    let back: Scenario = serde_json::from_value(json.clone()).unwrap();
    assert_eq!(back, s);
    let mut extra = json.clone();
    extra["ramp"] = 3.into();
    assert!(serde_json::from_value::<Scenario>(extra).is_err());
    let mut nested = json;
    nested["timeline"]["angel"] = 1.into();
    assert!(serde_json::from_value::<Scenario>(nested).is_err());
    let minimal = r#"{"kind":"mixture","model":{"n_modes":1,"j0_sign":-1,"j_weights":[1.5],"gain":15.0}}"#;
    let m: Scenario = serde_json::from_str(minimal).unwrap();
    assert_eq!(m.kind, ScenarioKind::Mixture);
    assert_eq!(m.timeline, Default::default());
    assert_eq!(m.initial, InitialCondition::Tc0);
}

#[test]
fn basin_of_equilibria_and_rotations() {
    let scn = Scenario::rotate_default();
    let model = RingModel::new(scn.model.clone()).unwrap();
    let stim = make_lgn_stimulus(0.1, 0.0, 0.01, &scn.model).unwrap();
    let (tc0, tc90) = bistable_pair(&model, &stim).unwrap();
    let cfg = BasinConfig::default();
    let refs = [tc0.clone(), tc90.clone()];
    let out = classify_basin(&tc0, &model, &stim, &refs, 0.0, &cfg).unwrap();
    assert_eq!(out.basin, Basin::Tc0);
    assert_eq!(out.matched, Some(0));
    assert!(out.converged);
    assert_eq!(label_state(&tc90, &scn.model, 0.0), Basin::Tc90);

    let rotated = tc0.group_act(FRAC_PI_2, false);
    let out = classify_basin(&rotated, &model, &Stimulus::none(1), &[], 0.0, &cfg).unwrap();
    assert!(out.converged);
    assert!(angle_distance(out.rest.peak_angle(), FRAC_PI_2) < 1e-6);
    assert_eq!(out.basin, Basin::Tc90);

    let short = BasinConfig { t_max: 1.0, ..cfg };
    let out = classify_basin(&CortexState::zeros(1), &model, &stim, &refs, 0.0, &short).unwrap();
    assert!(!out.converged);
    assert_eq!(out.basin, Basin::Undecided);
}

#[test]
fn random_initial_states_settle_in_a_tuned_basin() {
    let spec = ModelSpec::new(-1, vec![1.5]).with_gain(15.0);
    let model = RingModel::new(spec.clone()).unwrap();
    let stim = make_lgn_stimulus(0.1, 0.0, 0.01, &spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = BasinConfig {
        tol: 1e-7,
        ..Default::default()
    };
    for _ in 0..20 {
        let z = Complex64::from_polar(rng.random_range(0.0..0.4), rng.random_range(-PI..PI));
        let s = CortexState::new(rng.random_range(-0.4..0.2), vec![z]);
        let out = classify_basin(&s, &model, &stim, &[], 0.0, &cfg).unwrap();
        assert!(out.converged);
        assert!(matches!(out.basin, Basin::Tc0 | Basin::Tc90), "{:?}", out.basin);
    }
}

#[test]
fn ramp_scan_and_critical_duration() {
    let mut base = Scenario::rotate_default();
    base.t_end = 2.2e4;
    let scan = ramp_scan(&base, &[10.0, 1000.0]).unwrap();
    assert_eq!(scan.len(), 2);
    assert!(scan.iter().all(|(_, r)| r.basin == Basin::Tc90));
    assert!(ramp_scan(&base, &[]).is_err());
    // no change of outcome over the bracket
    assert_eq!(critical_ramp_duration(&base, 10.0, 1000.0, 1.0).unwrap(), None);
}

#[test]
fn branch_and_table_files_pass_the_schema_check() {
    let dir = scratch_dir("io");
    write_table(&dir.join("t.csv"), &["t", "v0"], &[vec![0.0, 1.0], vec![0.5, -2.0]]).unwrap();
    let t = check_csv_file(&dir.join("t.csv"), Some(&["t", "v0"])).unwrap();
    assert_eq!(t.rows, vec![vec![0.0, 1.0], vec![0.5, -2.0]]);

    let spec = ModelSpec::new(-1, vec![1.5]).with_gain(15.0);
    let stim = make_lgn_stimulus(0.1, 0.0, 0.01, &spec).unwrap();
    let tc0 = n1_equilibria(&spec, &stim, 24)
        .unwrap()
        .into_iter()
        .find(|e| e.tuning == Tuning::Tc0)
        .unwrap();
    let sys = PolarSystem::new(&spec, &stim, Parity::Even).unwrap();
    let base = Params::from_spec(&spec, stim.contrast);
    let b = continue_branch(
        &sys,
        &base,
        Param::Gain,
        &[tc0.v0, tc0.rho],
        (10.0, 20.0),
        -1.0,
        &ContinuationConfig::default(),
    )
    .unwrap();
    write_branch(&dir, "even", &b).unwrap();
    let t = check_csv_file(&dir.join("even.csv"), None).unwrap();
    assert_eq!(t.rows.len(), b.points.len());
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("even.json")).unwrap()).unwrap();
    assert_eq!(side["n_points"], b.points.len());
    std::fs::remove_dir_all(&dir).unwrap();
}
