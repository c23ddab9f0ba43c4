//! Experiment driver around `multicell-core`: parses a TOML config, runs
//! Monte-Carlo sweeps over the configured strategies, and writes CSV/JSON
//! results.

pub mod config;
pub mod experiment;
pub mod output;
