//! Batch front end: config parsing, experiment orchestration, and
//! plot-ready CSV/report emission for the unipor simulator.

pub mod config;
pub mod experiment;
