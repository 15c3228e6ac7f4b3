use thiserror::Error;

use crate::clock::VersionStamp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("revision would hold {0} entries, the limit is 65535")]
    CapacityExceeded(usize),
    #[error("snapshot {snapshot} is older than the collection horizon {horizon}")]
    StaleSnapshot {
        snapshot: VersionStamp,
        horizon: VersionStamp,
    },
    #[error("snapshot handle was already unregistered")]
    UseAfterUnregister,
    #[error("scan bounds are inverted")]
    InvalidRange,
    #[error("batch is empty")]
    EmptyBatch,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
