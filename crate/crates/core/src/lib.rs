//! Numerical laboratory for the ring model of orientation tuning.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`], [`state`], [`stimulus`], [`galerkin`], [`integrate`] and
//!   [`full_ring`] define the voltage equation, its Fourier–Galerkin
//!   reduction and time integration.
//! * [`solve`] and [`continuation`] provide Newton solves, stability,
//!   pseudo-arclength continuation, fold loci and the μ-homotopy.
//! * [`ring1`] collects the single-mode (N = 1) semi-analytic results.
//! * [`orbit`] implements the O(2) orbit-space reduction for N = 2.
//! * [`illusion`] scripts the dynamic-stimulus experiments.
//! * [`io`] holds the CSV/JSON formats shared with the command-line tool.

pub mod continuation;
pub mod error;
pub mod full_ring;
pub mod galerkin;
pub mod illusion;
pub mod integrate;
pub mod io;
pub mod model;
pub mod orbit;
pub mod quadrature;
pub mod ring1;
pub mod solve;
pub mod state;
pub mod stimulus;
pub mod systems;

pub use error::{Result, RingError};
pub use galerkin::RingModel;
pub use model::{ModelSpec, SigmoidKind};
pub use state::CortexState;
pub use stimulus::Stimulus;
