//! Library surface of the command-line driver, split out so the commands are
//! testable without spawning a process.

pub mod args;
pub mod commands;

pub use args::{Cli, Command};
pub use commands::{run, CliError};
