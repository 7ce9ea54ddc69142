//! Experiment harness behind the `ordlab` command: configuration and presets,
//! seeded sweeps, CSV and plot-data emission, and oracle verification.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod presets;
pub mod verify;

pub use config::{ExperimentConfig, GeneratorSpec, Settings, StrategySpec};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, Cell, Experiment, RunRecord};
pub use output::{aggregate, emit_csv, emit_plot_data, Curve};
pub use verify::verify;
