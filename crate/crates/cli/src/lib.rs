//! Library side of the `prun` command-line harness: scenario
//! resolution, physical-core detection, report serialization and
//! summary statistics.

pub mod cores;
pub mod report;
pub mod resolve;
pub mod stats;
