//! Library side of the `gklab` command-line tool: argument schemas, config
//! loading, sweeps and CSV formatting.

pub mod commands;
pub mod config;
pub mod table;
