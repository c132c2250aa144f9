//! File formats, configuration parsing and subcommands for the `ssml`
//! binary.

pub mod commands;
pub mod config;
pub mod format;
