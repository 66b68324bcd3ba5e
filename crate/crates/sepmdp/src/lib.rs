//! Model files, reports, Monte Carlo estimation and the `sepmdp` command-line
//! tool, built on [`sepmdp_core`].

pub mod args;
pub mod cli;
pub mod commands;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod parallel;

pub use error::CliError;
