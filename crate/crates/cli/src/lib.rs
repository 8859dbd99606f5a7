//! Command-line front end for `mmm-core`: JSON configuration, grid
//! specifications, CSV/JSON surface export and threaded evaluation of the
//! surface and the Monte Carlo oracle.

pub mod app;
pub mod config;
pub mod error;
pub mod export;
pub mod grid;
pub mod parallel;
pub mod verify;

pub use app::{run, run_with};
pub use config::Config;
pub use error::CliError;
