//! Command-line experiment runner for the branching Brownian motion toolkit:
//! configuration, run directories with manifests, and one subcommand per
//! estimator.

pub mod checks;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
