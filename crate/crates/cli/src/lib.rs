//! Command-line front end for the `diracwkb` library.

pub mod config;
pub mod range;
pub mod run;

pub use config::{Cli, Command, RunConfig};
pub use run::{error_report, exit_code, run, Outcome};
