//! Std companion to `cema-core`: JSON scenario files, trace CSVs, reports,
//! random scenarios and the `cema` command-line driver.

pub mod cli;
pub mod gen;
pub mod report;
pub mod scenario_file;
pub mod trace;
