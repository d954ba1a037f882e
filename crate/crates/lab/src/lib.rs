//! Scenario configuration, sweep orchestration, CSV/SVG output and the
//! acceptance suite for the RMSMD lab, on top of `rmsmd-core`.

pub mod acceptance;
pub mod cli;
pub mod config;
pub mod error;
pub mod plot;
pub mod presets;
pub mod runner;
pub mod table;

pub use config::ScenarioConfig;
pub use error::{LabError, Result};
pub use runner::{run_scenario, SweepResult};
