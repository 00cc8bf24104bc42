//! Experiment harness for censored semi-bandit simulations: instance files
//! and presets, experiment configs, seeded parallel repetitions with
//! confidence intervals, CSV and Markdown output, and the acceptance suite.

pub mod acceptance;
pub mod config;
mod error;
pub mod experiment;
pub mod instance;
pub mod kv;
pub mod output;
pub mod policy;

pub use config::{Experiment, ExperimentConfig};
pub use error::{LabError, Result};
pub use experiment::{confidence_interval, run_experiment, run_resolved, AggregateResult};
pub use instance::{InstanceSpec, Preset};
pub use output::Format;
pub use policy::{PolicyKind, PolicySpec, ResolvedPolicy};
