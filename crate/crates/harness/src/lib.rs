//! Experiment orchestration for the `whittle` tool: scenario configs,
//! replication loops, CSV records and violin plots.

pub mod cli;
pub mod config;
pub mod output;
pub mod plot;
pub mod scenario;
