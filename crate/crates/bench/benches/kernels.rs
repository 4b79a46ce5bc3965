use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use ring_bench::{n1_model, n1_spec, sample_state, two_mode_spec};
use ring_core::continuation::{continue_branch, ContinuationConfig};
use ring_core::galerkin::galerkin_rhs;
use ring_core::orbit::{chebyshev_fit, reduce_invariants};
use ring_core::ring1::{n1_equilibria, Parity, PolarSystem, Tuning};
use ring_core::systems::{Param, Params};
use ring_core::{ModelSpec, RingModel, SigmoidKind, Stimulus};

fn rhs(c: &mut Criterion) {
    let (model, stim) = n1_model();
    let s = sample_state(1);
    c.bench_function("galerkin_rhs/n1", |b| {
        b.iter(|| galerkin_rhs(black_box(&s), &stim, &model))
    });
    let spec = ModelSpec::new(-1, vec![1.5, -0.8, 0.6]).with_gain(6.0);
    let model3 = RingModel::new(spec).unwrap();
    let s3 = sample_state(3);
    let none = Stimulus::none(3);
    c.bench_function("galerkin_rhs/n3", |b| {
        b.iter(|| galerkin_rhs(black_box(&s3), &none, &model3))
    });
}

fn invariants(c: &mut Criterion) {
    let series = Arc::new(chebyshev_fit(SigmoidKind::Standard, 14.0, 0.01).unwrap());
    let spec = two_mode_spec();
    let mut g = c.benchmark_group("orbit");
    g.sample_size(10);
    g.bench_function("chebyshev_fit", |b| {
        b.iter(|| chebyshev_fit(SigmoidKind::Standard, black_box(14.0), 0.01))
    });
    g.bench_function("reduce_invariants", |b| {
        b.iter(|| reduce_invariants(black_box(&series), &spec))
    });
    g.finish();
}

fn continuation(c: &mut Criterion) {
    let spec = n1_spec();
    let (_, stim) = n1_model();
    let eq = n1_equilibria(&spec, &stim, 24).unwrap();
    let tc90 = eq.iter().find(|e| e.tuning == Tuning::Tc90).unwrap();
    let sys = PolarSystem::new(&spec, &stim, Parity::Odd).unwrap();
    let base = Params::from_spec(&spec, stim.contrast);
    let cfg = ContinuationConfig::default();
    let mut g = c.benchmark_group("continuation");
    g.sample_size(20);
    g.bench_function("n1_equilibria", |b| {
        b.iter(|| n1_equilibria(black_box(&spec), &stim, 24))
    });
    g.bench_function("odd_branch_to_fold", |b| {
        b.iter(|| continue_branch(&sys, &base, Param::Gain, &[tc90.v0, -tc90.rho], (0.0, 20.0), -1.0, &cfg))
    });
    g.finish();
}

criterion_group!(benches, rhs, invariants, continuation);
criterion_main!(benches);
