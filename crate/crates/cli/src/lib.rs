//! Command-line driver for the corner-flow solver: scenario configs, presets,
//! the solve/audit pipeline and CSV/JSON exports.

pub mod app;
pub mod args;
pub mod config;
pub mod error;
pub mod export;
pub mod pipeline;
pub mod presets;

pub use config::ScenarioConfig;
pub use error::{CliError, EXIT_AUDIT, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_IO, EXIT_OK, EXIT_SOLVER};
