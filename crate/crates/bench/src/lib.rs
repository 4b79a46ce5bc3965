//! Shared fixtures for the benchmarks.

use num_complex::Complex64;
use ring_core::stimulus::make_lgn_stimulus;
use ring_core::{CortexState, ModelSpec, RingModel, Stimulus};

pub fn n1_spec() -> ModelSpec {
    ModelSpec::new(-1, vec![1.5]).with_gain(15.0)
}

/// The single-mode model at λ = 15 with its canonical stimulus.
pub fn n1_model() -> (RingModel, Stimulus) {
    let spec = n1_spec();
    let stim = make_lgn_stimulus(0.1, 0.0, 0.01, &spec).expect("valid stimulus");
    (RingModel::new(spec).expect("valid spec"), stim)
}

pub fn two_mode_spec() -> ModelSpec {
    ModelSpec::new(-1, vec![9.0, 6.66]).with_gain(1.0).with_threshold(0.2)
}

/// A generic state with `n` modes.
pub fn sample_state(n: usize) -> CortexState {
    let z = (0..n)
        .map(|k| Complex64::from_polar(0.2 / (k + 1) as f64, 0.3 + k as f64))
        .collect();
    CortexState::new(-0.1, z)
}
