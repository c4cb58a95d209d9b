//! Experiment runner behind the `ife` binary: TOML run configurations,
//! formula-defined problems, studies with acceptance gates, and reports.

pub mod config;
pub mod expr;
pub mod report;
pub mod studies;
