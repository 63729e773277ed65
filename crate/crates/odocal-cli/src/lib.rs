//! Command-line front end for the odocal calibration toolkit: subcommand
//! implementations, file formats, and the config schema.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;
pub mod scenario;
