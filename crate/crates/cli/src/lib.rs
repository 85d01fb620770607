//! Experiment harness for the finite-field counting lab: a registry of
//! deterministic, seeded experiments over the exact counters and analytic
//! forms of `fqlab-core`, with JSON/CSV report emission.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{parse_config_file, parse_config_text, resolve, ExperimentConfig, RawConfig};
pub use experiments::{csv_columns, info, run_experiment, REGISTRY};
pub use report::{Format, Report, Row};
