//! Experiment runner for `inertia-core`: the built-in reproduction presets,
//! TOML experiment files, comparison summaries and CSV output.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{load, parse_config, parse_seeds, preset, Emit, ExperimentConfig, RunSpec, PRESETS};
pub use error::{CliError, CliResult};
pub use experiment::{execute, CheckRecord, ComparisonSummary, RunSummary, SeedOutcome};
