//! Config-driven batch runner for hyperhamiltonian scenarios: validate
//! structures, integrate flows with invariant monitors, solve oscillators
//! in closed form, certify non-Hamiltonianity and run the form-level
//! invariant suites. The binary in `main.rs` is a thin argument-parsing
//! shell over [`commands`].

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::RunOptions;
pub use config::{Scenario, ScenarioConfig};
pub use error::CliError;
pub use report::RunReport;

use std::path::Path;

/// Load, parse and semantically validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let config = ScenarioConfig::from_json(&text)?;
    Scenario::build(config)
}
