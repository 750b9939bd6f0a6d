//! File formats, configuration, reports and the command implementations
//! behind the `fedheat` binary.

pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset_io;
pub mod error;
pub mod iris;
pub mod report;
