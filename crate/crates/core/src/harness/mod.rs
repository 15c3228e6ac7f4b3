//! Correctness tooling: a sequential oracle, history recording, a
//! linearizability checker and the randomized drivers built on them.
//!
//! Everything here is ordinary library code so that integration tests, the
//! acceptance suite and ad-hoc investigations share one implementation.

pub mod checker;
pub mod history;
pub mod oracle;
pub mod workload;

pub use checker::{check, CheckStats, Verdict};
pub use history::{Call, Event, History, Recorder, Reply, ThreadLog};
pub use oracle::{OracleModel, SnapId};
