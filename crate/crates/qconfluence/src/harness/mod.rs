//! Configuration, built-in examples, orchestration and output for the CLI.

pub mod registry;
pub mod commands;
pub mod config;
pub mod report;
pub mod svg;
