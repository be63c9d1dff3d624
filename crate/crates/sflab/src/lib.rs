//! Scenario runner for the saddle-focus lab: configuration files, CSV/JSON
//! tables, SVG figures and the `sflab` command line.

pub mod config;
pub mod formats;
pub mod parallel;
pub mod runner;
pub mod svg;

pub use config::{ConfigError, Scenario, ScenarioConfig};
pub use runner::{run, run_text, RunError, RunOutput, Status};
