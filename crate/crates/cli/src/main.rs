//! `ringmodel`: command-line front end for the ring model laboratory.

mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use ring_core::io::{write_json, Manifest, RunStatus};
use ring_core::RingError;

use config::*;

#[derive(Parser)]
#[command(name = "ringmodel", version, about = "Ring model of orientation tuning")]
struct Cli {
    /// Output directory; every emitted path is relative to it.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the Galerkin system and write the trajectory.
    Simulate(ConfigArg),
    /// Newton solves from seeds, with stability.
    Equilibria(ConfigArg),
    /// Pseudo-arclength continuation of a branch.
    Continue(ConfigArg),
    /// Two-parameter fold curve in (contrast, gain).
    FoldLocus(ConfigArg),
    /// Minimal J1 admitting tuning, per threshold.
    ThresholdMap {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Overrides the sign of the uniform coupling.
        #[arg(long, allow_hyphen_values = true)]
        eps0: Option<f64>,
    },
    /// Orbit-space invariant polynomials for two modes.
    OrbitReduce(ConfigArg),
    /// Activity profiles of equilibria or given states.
    TuningCurve(ConfigArg),
    /// Dynamic-stimulus protocol.
    Illusion(ConfigArg),
    /// Every dataset with default configurations, one subdirectory each.
    ReproAll,
    /// Re-run the command recorded in a manifest.
    Rerun { manifest: PathBuf },
}

#[derive(clap::Args)]
struct ConfigArg {
    /// JSON configuration; defaults are used for omitted keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

enum Failure {
    Invalid(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<RingError> for Failure {
    fn from(e: RingError) -> Self {
        let m = e.to_string();
        match e {
            RingError::InvalidParameter(_)
            | RingError::QuadratureOrder { .. }
            | RingError::EmptyGrid(_)
            | RingError::NotBistable(_)
            | RingError::Json(_) => Failure::Invalid(m),
            RingError::Io(_) => Failure::Io(m),
            _ => Failure::Numerical(m),
        }
    }
}

fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))
        }
    }
}

/// Runs `f`, then writes `manifest.json` echoing the resolved configuration.
fn execute<T, F>(name: &str, cfg: &T, out: &Path, f: F) -> Result<(), Failure>
where
    T: Serialize,
    F: FnOnce(&T, &Path) -> ring_core::Result<Vec<String>>,
{
    let config = serde_json::to_value(cfg).map_err(|e| Failure::Invalid(e.to_string()))?;
    fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    let t0 = Instant::now();
    let res = f(cfg, out).map_err(Failure::from);
    let (status, outputs, diagnostics) = match &res {
        Ok(o) => (RunStatus::Ok, o.clone(), Vec::new()),
        Err(e @ Failure::Invalid(_)) => (RunStatus::InvalidConfig, Vec::new(), vec![e.message().to_string()]),
        Err(e) => (RunStatus::NumericalFailure, Vec::new(), vec![e.message().to_string()]),
    };
    let manifest = Manifest {
        command: name.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config,
        outputs,
        status,
        diagnostics,
    };
    write_json(&out.join("manifest.json"), &manifest).map_err(Failure::from)?;
    if res.is_ok() {
        eprintln!("{name}: wrote {} in {:.1} s", out.display(), t0.elapsed().as_secs_f64());
    }
    res.map(|_| ())
}

fn dispatch(name: &str, config: Option<serde_json::Value>, path: Option<&Path>, out: &Path) -> Result<(), Failure> {
    fn resolve<T: DeserializeOwned + Default>(v: Option<serde_json::Value>, p: Option<&Path>) -> Result<T, Failure> {
        match v {
            Some(v) => serde_json::from_value(v).map_err(|e| Failure::Invalid(e.to_string())),
            None => load(p),
        }
    }
    match name {
        "simulate" => execute(name, &resolve::<SimulateConfig>(config, path)?, out, commands::simulate),
        "equilibria" => execute(
            name,
            &resolve::<EquilibriaConfig>(config, path)?,
            out,
            commands::equilibria,
        ),
        "continue" => execute(
            name,
            &resolve::<ContinueConfig>(config, path)?,
            out,
            commands::continue_cmd,
        ),
        "fold-locus" => execute(
            name,
            &resolve::<FoldLocusConfig>(config, path)?,
            out,
            commands::fold_locus_cmd,
        ),
        "threshold-map" => execute(
            name,
            &resolve::<ThresholdMapConfig>(config, path)?,
            out,
            commands::threshold_map,
        ),
        "orbit-reduce" => execute(
            name,
            &resolve::<OrbitReduceConfig>(config, path)?,
            out,
            commands::orbit_reduce,
        ),
        "tuning-curve" => execute(
            name,
            &resolve::<TuningCurveConfig>(config, path)?,
            out,
            commands::tuning_curve,
        ),
        "illusion" => execute(name, &resolve::<IllusionConfig>(config, path)?, out, commands::illusion),
        other => Err(Failure::Invalid(format!("unknown command {other:?}"))),
    }
}

fn repro_all(out: &Path) -> Result<(), Failure> {
    let t0 = Instant::now();
    let jobs: Vec<(&str, &str, serde_json::Value)> = vec![
        (
            "threshold_map",
            "threshold-map",
            to_value(ThresholdMapConfig::default()),
        ),
        ("branch_orthogonal", "continue", to_value(ContinueConfig::default())),
        ("branch_aligned", "continue", to_value(ContinueConfig::even_branch())),
        (
            "tuning_single_mode",
            "tuning-curve",
            to_value(TuningCurveConfig::default()),
        ),
        ("skeleton_two_mode", "continue", to_value(ContinueConfig::skeleton())),
        (
            "invariants_two_mode",
            "orbit-reduce",
            to_value(OrbitReduceConfig::default()),
        ),
        (
            "tuning_two_mode",
            "tuning-curve",
            to_value(TuningCurveConfig::driven_two_mode()),
        ),
        ("fold_locus", "fold-locus", to_value(FoldLocusConfig::default())),
        ("illusion_rotate", "illusion", to_value(IllusionConfig::default())),
        ("illusion_mixture", "illusion", to_value(IllusionConfig::mixture())),
        ("simulate", "simulate", to_value(SimulateConfig::default())),
    ];
    let mut outputs = Vec::new();
    let mut diagnostics = Vec::new();
    let mut worst: Option<Failure> = None;
    for (dir, cmd, cfg) in &jobs {
        let sub = out.join(dir);
        match dispatch(cmd, Some(cfg.clone()), None, &sub) {
            Ok(()) => outputs.push(format!("{dir}/manifest.json")),
            Err(e) => {
                diagnostics.push(format!("{dir}: {}", e.message()));
                if worst.as_ref().is_none_or(|w| e.code() > w.code()) {
                    worst = Some(e);
                }
            }
        }
    }
    diagnostics.push(format!("elapsed {:.1} s", t0.elapsed().as_secs_f64()));
    let manifest = Manifest {
        command: "repro-all".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::Value::Object(Default::default()),
        outputs,
        status: match &worst {
            None => RunStatus::Ok,
            Some(Failure::Invalid(_)) => RunStatus::InvalidConfig,
            Some(_) => RunStatus::NumericalFailure,
        },
        diagnostics,
    };
    write_json(&out.join("manifest.json"), &manifest).map_err(Failure::from)?;
    worst.map_or(Ok(()), Err)
}

fn to_value<T: Serialize>(v: T) -> serde_json::Value {
    serde_json::to_value(v).expect("configurations serialize")
}

fn rerun(manifest: &Path, out: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(manifest).map_err(|e| Failure::Io(format!("{}: {e}", manifest.display())))?;
    let m: Manifest =
        serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", manifest.display())))?;
    if m.command == "repro-all" {
        return repro_all(out);
    }
    dispatch(&m.command, Some(m.config), None, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.as_path();
    let res = match &cli.command {
        Command::Simulate(c) => dispatch("simulate", None, c.config.as_deref(), out),
        Command::Equilibria(c) => dispatch("equilibria", None, c.config.as_deref(), out),
        Command::Continue(c) => dispatch("continue", None, c.config.as_deref(), out),
        Command::FoldLocus(c) => dispatch("fold-locus", None, c.config.as_deref(), out),
        Command::ThresholdMap { cfg, eps0 } => load::<ThresholdMapConfig>(cfg.config.as_deref()).and_then(|mut c| {
            if let Some(e) = eps0 {
                c.eps0 = *e;
            }
            dispatch("threshold-map", Some(to_value(c)), None, out)
        }),
        Command::OrbitReduce(c) => dispatch("orbit-reduce", None, c.config.as_deref(), out),
        Command::TuningCurve(c) => dispatch("tuning-curve", None, c.config.as_deref(), out),
        Command::Illusion(c) => dispatch("illusion", None, c.config.as_deref(), out),
        Command::ReproAll => repro_all(out),
        Command::Rerun { manifest } => rerun(manifest, out),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
