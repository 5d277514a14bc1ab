//! Configuration, orchestration and output for scrambling experiments.
//!
//! [`manifest::run`] dispatches an [`config::ExperimentConfig`] to one of the
//! simulation methods, writes a CSV per output table and records checksums in
//! a JSON manifest. [`verify`] re-runs the acceptance checks.

pub mod analysis;
pub mod config;
pub mod error;
pub mod figures;
pub mod manifest;
pub mod methods;
pub mod output;
pub mod verify;

pub use config::{ExperimentConfig, Method};
pub use error::{RunError, RunResult};
pub use manifest::{run, run_with_threads, RunManifest};
