//! Command-line front end for `fedclus-core`: JSON experiment configs,
//! multi-seed runs, CSV/JSON reports and SVG figures.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod report;

pub use config::{parse_config, parse_config_str, ExperimentConfig};
pub use error::{CliError, Result};
pub use report::{ExperimentReport, Summary};
