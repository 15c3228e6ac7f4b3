//! A lock-free ordered map built on a multiversioned skip list.
//!
//! Every node of the list owns a key range and a chain of immutable
//! revisions, each holding the full sorted contents of the range at one
//! version. Updates install a new revision with a compare-and-swap and
//! publish it by assigning a clock-derived version, which makes snapshot
//! reads, linearizable range scans and atomic multi-key batches cheap.
//! Nodes split and merge on their own as the read/update mix changes.
//!
//! ```
//! use mvskip::{Batch, SkipIndex};
//!
//! let index = SkipIndex::new();
//! index.put(1u32, "one");
//! let snap = index.register();
//! let mut batch = Batch::new();
//! batch.put(2, "two").remove(1);
//! index.batch(batch).unwrap();
//!
//! assert_eq!(index.get(&1), None);
//! assert_eq!(index.get_in(&1, &snap).unwrap(), Some("one"));
//! assert_eq!(index.scan(&0, &10, index.now()).unwrap(), vec![(2, "two")]);
//! ```

pub mod autoscale;
pub mod baseline;
mod batch;
pub mod bench;
pub mod clock;
pub mod error;
pub mod harness;
pub mod hooks;
mod map;
mod node;
pub mod reclaim;
pub mod revision;
mod skiplist;
pub mod snapshot;

pub use autoscale::AutoscaleConfig;
pub use batch::Batch;
pub use clock::{Clock, VersionStamp};
pub use error::{Error, Result};
pub use revision::{Entries, Op, RevisionKind, MAX_ENTRIES};
pub use skiplist::{
    Audit, Config, IndexKey, IndexValue, NodeInfo, SkipIndex, TowerConfig, MAX_BATCH,
};
pub use snapshot::SnapshotHandle;
