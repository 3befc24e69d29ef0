//! File formats, experiment configuration and the `planimm` command line on
//! top of `planimm-core`.

pub mod checks;
pub mod cli;
pub mod config;
pub mod fieldfile;
pub mod report;
