//! File formats, experiment drivers and the command-line front end for
//! [`nhp_core`].

pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;

pub use error::{CliError, CliResult};
