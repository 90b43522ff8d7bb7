//! Command-line front end for `tvtrack`: configured experiment runs, theory
//! constants, and the reference figure presets.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod plot;

pub use error::CliError;
