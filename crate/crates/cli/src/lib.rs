//! Library side of the `consensus` binary: instance files and subcommands.

pub mod commands;
pub mod instance;
