//! Microbenchmark driver.
//!
//! Worker threads each play one role (updater, reader or scanner) against a
//! pre-populated index. Throughput is counted in basic operations: a batch
//! of n updates counts n, a scan counts the entries it returned.

pub mod config;
pub mod keys;
pub mod report;
pub mod run;

pub use config::{
    BatchMode, BatchOrder, ConfigError, EntrySize, IndexKind, KeyDist, Role, Scenario, Stop,
    WorkloadConfig,
};
pub use keys::KeyGen;
pub use report::{write_csv, write_json, BenchReport, CSV_HEADER};
pub use run::{initial_keys, initial_value, run, run_on, UpdateOp, UpdateStream};
