//! Experiment harness: config files, mission matrices and summaries.

pub mod config;
pub mod run;
pub mod summary;
