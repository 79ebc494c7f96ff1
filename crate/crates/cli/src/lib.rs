//! Batch front end for mean-field edge caching: strict configs, figure
//! presets, solves, simulations and sweeps with run manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod presets;
pub mod scenario;

pub use commands::{cmd_simulate, cmd_solve, cmd_sweep, RunOptions};
pub use config::{ConfigDoc, RunConfig};
pub use error::{CliError, CliResult};
pub use scenario::Scenario;
