//! Switched step-size FxNLMS active noise control simulation.
//!
//! The controller adapts a transversal filter through a filtered-reference
//! normalized LMS update. At every tick the step-size is picked from a
//! candidate set by comparing per-candidate mean-square-deviation trends.

pub mod analysis;
pub mod error;
pub mod fxnlms;
pub mod harness;
pub mod metrics;
pub mod noise;
pub mod paths;
pub mod scenario;
pub mod sss;

pub use error::{Error, Result};
pub use fxnlms::{anc_step, ControllerState, FixedStep, Plant, ScalingKind, StepSchedule, Tick};
pub use harness::{run_experiment, run_trial, ExperimentOptions, ExperimentOutcome, RunResult};
pub use noise::{NoiseSource, NoiseSpec, RngStream};
pub use paths::{FirPath, PathPreset};
pub use scenario::{Scenario, StepPolicy};
pub use sss::{FullMsdOracle, SssState};
