//! Command line front end: experiment configs, command dispatch and reports.

pub mod config;
pub mod run;
