//! Command-line front end: run configurations, artifact writing and the
//! acceptance suite.

pub mod config;
pub mod error;
pub mod run;
pub mod verify;

pub use config::{RunConfig, ScenarioKind};
pub use error::{CliError, Result};
