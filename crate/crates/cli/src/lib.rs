//! Command-line front end for the resonator-array simulator: JSON
//! experiment configs, figure presets and CSV/SVG artifact output.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{parse_config, ConfigError, ExperimentConfig, OutputFormat};
pub use error::{CliError, CliResult};
pub use presets::FigurePreset;
pub use run::{execute, figure_config, Command};
