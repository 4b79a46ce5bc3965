use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ring_core::continuation::ContinuationConfig;
use ring_core::galerkin::Nonlinearity;
use ring_core::integrate::rk4_vec;
use ring_core::orbit::{
    chebyshev_fit, count_peaks, driven_pair, hilbert_pi, invariant_oracle, oracle_at_state, oracle_model, orbit_rhs,
    orbit_skeleton, reduce_invariants, tuning_curve_n2, ChebyshevSeries, InvariantSet, OrbitPoint, OrbitSkeleton,
    OrbitSystem, RhsForm,
};
use ring_core::quadrature::Quadrature;
use ring_core::state::reconstruct_activity;
use ring_core::stimulus::lgn_with_harmonic;
use ring_core::{CortexState, ModelSpec, RingModel, SigmoidKind, Stimulus};

fn n2_spec() -> ModelSpec {
    ModelSpec::new(-1, vec![9.0, 6.66]).with_gain(1.0).with_threshold(0.2)
}

fn fitted() -> &'static (Arc<ChebyshevSeries>, InvariantSet) {
    static CELL: OnceLock<(Arc<ChebyshevSeries>, InvariantSet)> = OnceLock::new();
    CELL.get_or_init(|| {
        let series = Arc::new(chebyshev_fit(SigmoidKind::Standard, 14.0, 0.01).unwrap());
        let inv = reduce_invariants(&series, &n2_spec()).unwrap();
        (series, inv)
    })
}

fn skeleton() -> &'static OrbitSkeleton {
    static CELL: OnceLock<OrbitSkeleton> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = ModelSpec::new(-1, vec![9.0, 6.66])
            .with_kind(SigmoidKind::Centered)
            .with_gain(3.0);
        let series = Arc::new(chebyshev_fit(SigmoidKind::Centered, 14.0, 0.01).unwrap());
        let sys = OrbitSystem::new(spec, series, 0.0).unwrap();
        let cfg = ContinuationConfig {
            ds_max: 0.05,
            ..Default::default()
        };
        orbit_skeleton(&sys, 3.0, 1e-4, &cfg).unwrap()
    })
}

fn random_z(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(rng.random_range(0.05..0.6), rng.random_range(-PI..PI))
}

fn diff(a: &ring_core::orbit::InvariantValues, b: &ring_core::orbit::InvariantValues) -> f64 {
    [a.b0 - b.b0, a.a - b.a, a.b - b.b, a.c - b.c, a.d - b.d]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

#[test]
fn reduction_matches_quadrature_oracle() {
    let (series, inv) = fitted();
    let spec = n2_spec();
    let model = oracle_model(&spec, Nonlinearity::Polynomial(series.clone())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let v0 = rng.random_range(-0.5..0.5);
        let [p1, p2, p3] = hilbert_pi(random_z(&mut rng), random_z(&mut rng));
        let pt = OrbitPoint::new(v0, p1, p2, p3);
        let o = invariant_oracle(&pt, &model).unwrap();
        let r = inv.eval(spec.gain, v0, pt.pi());
        assert!(diff(&o, &r) <= inv.fit_error + 1e-8, "{o:?} vs {r:?}");
    }
}

#[test]
fn oracle_is_gauge_invariant() {
    let (series, _) = fitted();
    let model = oracle_model(&n2_spec(), Nonlinearity::Polynomial(series.clone())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..30 {
        let s = CortexState::new(
            rng.random_range(-0.5..0.5),
            vec![random_z(&mut rng), random_z(&mut rng)],
        );
        let gauge = oracle_at_state(&OrbitPoint::from_state(&s).representative(), &model).unwrap();
        let g = s.group_act(rng.random_range(-PI..PI), rng.random_bool(0.5));
        let other = oracle_at_state(&g, &model).unwrap();
        assert!(diff(&gauge, &other) < 1e-11);
        assert!(diff(&gauge, &oracle_at_state(&s, &model).unwrap()) < 1e-11);
    }
}

#[test]
fn oracle_refuses_boundary_orbits() {
    let (series, _) = fitted();
    let model = oracle_model(&n2_spec(), Nonlinearity::Polynomial(series.clone())).unwrap();
    assert!(invariant_oracle(&OrbitPoint::new(0.0, 0.0, 0.1, 0.0), &model).is_err());
    // real z₂ gives π₃² = π₁²π₂
    let [p1, p2, p3] = hilbert_pi(Complex64::new(0.3, 0.0), Complex64::new(0.2, 0.0));
    assert!(invariant_oracle(&OrbitPoint::new(0.0, p1, p2, p3), &model).is_err());
}

fn chain_rule_defect(form: RhsForm, seeds: u64) -> f64 {
    let (series, inv) = fitted();
    let spec = n2_spec();
    let cart = RingModel::with_quadrature(spec.clone(), Quadrature::periodic(128))
        .unwrap()
        .with_nonlinearity(Nonlinearity::Polynomial(series.clone()));
    let stim = Stimulus::none(2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..seeds {
        let s0 = CortexState::new(
            rng.random_range(-0.5..0.5),
            vec![random_z(&mut rng), random_z(&mut rng)],
        );
        let mut y = s0.to_real();
        let mut q = OrbitPoint::from_state(&s0).to_vec();
        let h = 0.01;
        for i in 0..500 {
            let t = i as f64 * h;
            y = rk4_vec(&|_, u: &[f64]| cart.rhs_real(u, &stim), t, &y, h);
            q = rk4_vec(
                &|_, u: &[f64]| orbit_rhs(&OrbitPoint::from_slice(u), inv, &spec, 0.0, form).to_vec(),
                t,
                &q,
                h,
            );
        }
        let p = OrbitPoint::from_state(&CortexState::from_real(&y)).to_vec();
        worst = (0..4).fold(worst, |m, k| m.max((p[k] - q[k]).abs()));
    }
    worst
}

#[test]
fn orbit_flow_is_the_image_of_the_cartesian_flow() {
    assert!(chain_rule_defect(RhsForm::Corrected, 20) <= 1e-6);
    // the variant with c in the π₁π₂ term does not commute with the projection
    assert!(chain_rule_defect(RhsForm::CrossC, 5) > 1e-4);
}

#[test]
fn skeleton_ratio_and_shapes() {
    let sk = skeleton();
    let pairs: Vec<f64> = sk
        .critical_gains
        .iter()
        .filter(|c| c.multiplicity >= 2)
        .map(|c| c.gain)
        .collect();
    assert_eq!(pairs.len(), 2);
    assert!(pairs[0] < pairs[1]);
    assert!((pairs[0] / pairs[1] - 6.66 / 9.0).abs() <= 1e-3);
    assert_eq!(sk.branches.len(), 2);
    let (first, second) = (&sk.branches[0], &sk.branches[1]);
    assert_eq!(first.mode, 1);
    assert_eq!(second.mode, 2);

    let spec = ModelSpec::new(-1, vec![9.0, 6.66]).with_kind(SigmoidKind::Centered);
    let onset = |b: &ring_core::orbit::OrbitBranch| {
        b.branch
            .points
            .iter()
            .find(|p| p.params[0] > b.branch.special_points.iter().map(|s| s.params[0]).fold(0.0, f64::max) * 1.02)
            .unwrap()
            .clone()
    };
    let p1 = onset(first);
    let pt1 = OrbitPoint::from_slice(&p1.state);
    let curve = tuning_curve_n2(&pt1, &spec.clone().with_gain(p1.params[0]), 256).unwrap();
    assert_eq!(count_peaks(&curve.iter().map(|c| c.1).collect::<Vec<_>>()), 1);
    assert!(p1.stable);

    let p2 = onset(second);
    let pt2 = OrbitPoint::from_slice(&p2.state);
    assert!(pt2.pi1.abs() < 1e-9);
    let rep = pt2.representative();
    let s = spec.with_gain(p2.params[0]);
    let act: Vec<f64> = (0..256)
        .map(|j| reconstruct_activity(&rep, &s, -PI / 2.0 + PI * j as f64 / 256.0))
        .collect();
    assert_eq!(count_peaks(&act), 2);
    assert!(!p2.stable);
}

#[test]
fn skeleton_points_satisfy_orbit_inequalities() {
    for b in &skeleton().branches {
        for p in &b.branch.points {
            assert!(OrbitPoint::from_slice(&p.state).contains(1e-7));
        }
    }
    for p in &skeleton().trivial.branch.points {
        assert_eq!(&p.state[1..], &[0.0, 0.0, 0.0]);
    }
}

#[test]
fn tuning_curve_matches_representative() {
    let spec = n2_spec().with_gain(1.3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let s = CortexState::new(
            rng.random_range(-0.3..0.3),
            vec![random_z(&mut rng), random_z(&mut rng)],
        );
        let pt = OrbitPoint::from_state(&s);
        // rotate so the first mode peaks at 0; reflect if needed to match sin θ₂ ≥ 0
        let aligned = s.group_act(-0.5 * s.z[0].arg(), false);
        let aligned = if aligned.z[1].im < 0.0 {
            aligned.group_act(0.0, true)
        } else {
            aligned
        };
        for (x, a) in tuning_curve_n2(&pt, &spec, 64).unwrap() {
            assert!((a - reconstruct_activity(&aligned, &spec, x)).abs() < 1e-12);
        }
    }
    assert!(tuning_curve_n2(&OrbitPoint::new(0.0, 0.0, 0.2, 0.0), &spec, 8).is_err());
}

#[test]
fn driven_pair_near_fold() {
    let spec = ModelSpec::new(-1, vec![9.0, 6.66]).with_gain(2.0);
    let stim = lgn_with_harmonic(0.05, 0.0, 0.01, &spec, 0.1).unwrap();
    let model = RingModel::new(spec).unwrap();
    let pair = driven_pair(&model, &stim, 2.0, 1.01, &ContinuationConfig::default()).unwrap();
    assert!((pair.gain / pair.fold_gain - 1.01).abs() < 1e-12);
    assert!(pair.tc0.state.z[0].re > 0.0 && pair.tc90.state.z[0].re < 0.0);
    assert!(pair.tc0.chart_stability.stable() && pair.tc0.full_stability.stable());
    assert!(pair.tc90.chart_stability.stable());
    assert!(pair.tc0.mode_ratio() <= 0.1 && pair.tc90.mode_ratio() <= 0.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hilbert_basis_is_invariant_and_satisfies_inequalities(
        r1 in 0.05..1.0f64, a1 in -PI..PI, r2 in 0.0..1.0f64, a2 in -PI..PI,
        gamma in -PI..PI, reflect in any::<bool>(),
    ) {
        let s = CortexState::new(0.0, vec![Complex64::from_polar(r1, a1), Complex64::from_polar(r2, a2)]);
        let p = OrbitPoint::from_state(&s);
        prop_assert!(p.contains(1e-12));
        let q = OrbitPoint::from_state(&s.group_act(gamma, reflect));
        for (x, y) in p.pi().iter().zip(q.pi()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let back = OrbitPoint::from_state(&p.representative());
        for (x, y) in p.pi().iter().zip(back.pi()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}
