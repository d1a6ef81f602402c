//! File formats, data handling, experiments and the command line for
//! subagged boosted probit model trees. The algorithms live in
//! `sbpmt_core`.

pub mod cli;
pub mod data;
pub mod experiments;
pub mod model_file;
pub mod train;

pub use sbpmt_core as core;
