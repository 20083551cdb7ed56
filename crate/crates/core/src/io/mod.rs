//! Configuration documents, snapshots and tabular dumps.

pub mod config;
pub mod fields;
pub mod snapshot;
