//! Experiment runner for the hyperlock workbench: presets, screened random
//! sessions, seeded studies and CSV output.

pub mod error;
pub mod experiment;
pub mod output;
pub mod presets;
pub mod screen;

pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentKind, ExperimentReport, ExperimentSpec};
pub use screen::random_hyperchaotic_config;
