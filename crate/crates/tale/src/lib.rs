//! Config files, result formats and the command-line driver for `tale-core`.
//!
//! - [`config`]: TOML morphology and experiment files
//! - [`io`]: calibration fixtures, trial files, result tables
//! - [`sweep`]: the morphology × direction × displacement experiment
//! - [`synthetic`]: seeded mock trial data
//! - [`cli`]: subcommands and exit codes

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod sweep;
pub mod synthetic;

pub use error::AppError;
