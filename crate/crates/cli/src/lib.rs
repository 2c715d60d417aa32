//! Experiment runner behind the `doublon-lab` binary: TOML configs, sweep
//! execution over the exact and circuit engines, CSV and gnuplot output.

pub mod config;
pub mod experiment;
pub mod plot;
pub mod presets;

pub use config::{parse, ExperimentConfig};
pub use experiment::{compute, run_experiment, Outcome, Table};
