//! Experiment harness for `hblab-core`: TOML configs, CSV output, the
//! command implementations behind the `hblab` binary and the acceptance
//! checks.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod recipes;
pub mod selftest;
