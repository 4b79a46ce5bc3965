//! Per-command configuration documents. Unknown keys are rejected; omitted
//! keys take the defaults below, and the resolved document is echoed into
//! the run manifest.

use serde::{Deserialize, Serialize};

use ring_core::continuation::ContinuationConfig;
use ring_core::illusion::Scenario;
use ring_core::ring1::{Parity, Tuning};
use ring_core::stimulus::lgn_with_harmonic;
use ring_core::systems::{Chart, Param};
use ring_core::{CortexState, ModelSpec, Result, SigmoidKind, Stimulus};

fn reference_model() -> ModelSpec {
    ModelSpec::new(-1, vec![1.5]).with_gain(15.0)
}

fn two_mode_model() -> ModelSpec {
    ModelSpec::new(-1, vec![9.0, 6.66]).with_gain(1.0).with_threshold(0.2)
}

/// `ε (1 - β + β cos 2(x - x₀) + r β cos 4(x - x₀))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StimulusConfig {
    pub beta: f64,
    pub x0: f64,
    pub contrast: f64,
    pub harmonic_ratio: f64,
}

impl Default for StimulusConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            x0: 0.0,
            contrast: 0.01,
            harmonic_ratio: 0.0,
        }
    }
}

impl StimulusConfig {
    pub fn build(&self, spec: &ModelSpec) -> Result<Stimulus> {
        lgn_with_harmonic(self.beta, self.x0, self.contrast, spec, self.harmonic_ratio)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub model: ModelSpec,
    pub stimulus: StimulusConfig,
    /// Zero state when absent.
    pub initial: Option<CortexState>,
    pub t_end: f64,
    pub dt: f64,
    pub sample_every: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            model: reference_model(),
            stimulus: StimulusConfig::default(),
            initial: None,
            t_end: 200.0,
            dt: 0.05,
            sample_every: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriaConfig {
    pub model: ModelSpec,
    pub stimulus: StimulusConfig,
    pub chart: Chart,
    /// Explicit Newton seeds.
    pub seeds: Vec<CortexState>,
    /// Additional seeds drawn uniformly from the absorbing box.
    pub random_seeds: usize,
    pub seed: u64,
    pub newton_tol: f64,
}

impl Default for EquilibriaConfig {
    fn default() -> Self {
        Self {
            model: reference_model(),
            stimulus: StimulusConfig::default(),
            chart: Chart::Reflection,
            seeds: Vec::new(),
            random_seeds: 64,
            seed: 0,
            newton_tol: 1e-12,
        }
    }
}

/// What is continued.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    /// Single-mode phase-locked family, started at an equilibrium of the
    /// given tuning at the model gain.
    Polar { parity: Parity, start: Tuning },
    /// Galerkin equilibria from an explicit state.
    Galerkin { chart: Chart, start: CortexState },
    /// Unforced two-mode skeleton in the orbit space.
    OrbitSkeleton {
        alpha: f64,
        max_fit_error: f64,
        lambda_max: f64,
        delta: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinueConfig {
    pub model: ModelSpec,
    pub stimulus: StimulusConfig,
    pub system: SystemConfig,
    pub param: Param,
    pub range: (f64, f64),
    pub direction: f64,
    pub continuation: ContinuationConfig,
}

impl Default for ContinueConfig {
    fn default() -> Self {
        Self {
            model: reference_model(),
            stimulus: StimulusConfig::default(),
            system: SystemConfig::Polar {
                parity: Parity::Odd,
                start: Tuning::Tc90,
            },
            param: Param::Gain,
            range: (0.0, 20.0),
            direction: -1.0,
            continuation: ContinuationConfig::default(),
        }
    }
}

impl ContinueConfig {
    pub fn even_branch() -> Self {
        Self {
            system: SystemConfig::Polar {
                parity: Parity::Even,
                start: Tuning::Tc0,
            },
            ..Self::default()
        }
    }

    pub fn skeleton() -> Self {
        Self {
            model: ModelSpec::new(-1, vec![9.0, 6.66])
                .with_kind(SigmoidKind::Centered)
                .with_gain(3.0),
            stimulus: StimulusConfig {
                contrast: 0.0,
                ..Default::default()
            },
            system: SystemConfig::OrbitSkeleton {
                alpha: 14.0,
                max_fit_error: 0.01,
                lambda_max: 3.0,
                delta: 1e-4,
            },
            range: (0.0, 3.0),
            direction: 1.0,
            continuation: ContinuationConfig {
                ds_max: 0.05,
                ..Default::default()
            },
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FoldLocusConfig {
    pub model: ModelSpec,
    pub stimulus: StimulusConfig,
    /// Contrast interval of the locus.
    pub range: (f64, f64),
    pub continuation: ContinuationConfig,
}

impl Default for FoldLocusConfig {
    fn default() -> Self {
        Self {
            model: reference_model(),
            stimulus: StimulusConfig::default(),
            range: (-0.02, 0.06),
            continuation: ContinuationConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdMapConfig {
    pub eps0: f64,
    pub thetas: Vec<f64>,
    pub j1_max: f64,
    pub j1_step: f64,
    pub lambda_max: f64,
}

impl Default for ThresholdMapConfig {
    fn default() -> Self {
        Self {
            eps0: -1.0,
            thetas: (0..=20).map(|i| 0.05 * i as f64).collect(),
            j1_max: 12.0,
            j1_step: 0.1,
            lambda_max: 30.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitReduceConfig {
    pub model: ModelSpec,
    pub alpha: f64,
    pub max_fit_error: f64,
}

impl Default for OrbitReduceConfig {
    fn default() -> Self {
        Self {
            model: two_mode_model(),
            alpha: 14.0,
            max_fit_error: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningCurveConfig {
    pub model: ModelSpec,
    pub stimulus: StimulusConfig,
    pub points: usize,
    /// States to draw; when empty, the equilibria for the stimulus.
    pub states: Vec<CortexState>,
    /// Two or more modes: take the equilibria at this multiple of the fold
    /// gain of the orthogonal family, searching down from the model gain.
    pub near_fold: Option<f64>,
}

impl Default for TuningCurveConfig {
    fn default() -> Self {
        Self {
            model: reference_model(),
            stimulus: StimulusConfig::default(),
            points: 256,
            states: Vec::new(),
            near_fold: None,
        }
    }
}

impl TuningCurveConfig {
    /// Tuned pair of the forced two-mode model near its fold.
    pub fn driven_two_mode() -> Self {
        Self {
            model: ModelSpec::new(-1, vec![9.0, 6.66]).with_gain(2.0),
            stimulus: StimulusConfig {
                beta: 0.05,
                harmonic_ratio: 0.1,
                ..Default::default()
            },
            near_fold: Some(1.01),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IllusionConfig {
    pub scenario: Scenario,
    /// Ramp durations for an additional rotate scan.
    pub ramp_scan: Vec<f64>,
}

impl Default for IllusionConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::rotate_default(),
            ramp_scan: Vec::new(),
        }
    }
}

impl IllusionConfig {
    pub fn mixture() -> Self {
        Self {
            scenario: Scenario::mixture_default(),
            ramp_scan: Vec::new(),
        }
    }
}
