//! Library surface of the `ncmap` command-line tool: configuration
//! parsing and the subcommand implementations, kept separate from the
//! binary so integration tests can drive them directly.

pub mod commands;
pub mod config;
