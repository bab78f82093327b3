//! Configuration-driven runner for the carnot-core checks.
//!
//! A run reads one [`ExperimentConfig`], builds the distance field, the
//! measure and the test family, executes the requested checks and writes a
//! JSON report per check plus a [`RunManifest`].

pub mod config;
pub mod error;
pub mod runner;
pub mod trace;

pub use config::{CheckSpec, ExperimentConfig};
pub use error::{CliError, CliResult};
pub use runner::{run, RunManifest};
