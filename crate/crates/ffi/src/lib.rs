//! C interface to [`mvskip`] with byte-string keys and values.
//!
//! Keys order lexicographically by byte. Every handle is opaque and owned by
//! the caller, who frees it with the matching `*_free` function. Functions
//! return an [`MvskipStatus`]; none of them unwinds into C.
//!
//! Pointers passed with a length may be null only when the length is zero.

use std::ffi::{c_char, c_void};
use std::ops::Bound;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use mvskip::{Batch, Error, SkipIndex, SnapshotHandle};

type Bytes = Arc<[u8]>;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvskipStatus {
    Ok = 0,
    /// The key is absent. Not an error.
    NotFound = 1,
    /// A required pointer was null.
    NullArgument = -1,
    /// The snapshot is older than the collection horizon.
    StaleSnapshot = -2,
    /// The snapshot handle was released.
    UseAfterUnregister = -3,
    /// Scan start is above the scan end.
    InvalidRange = -4,
    EmptyBatch = -5,
    /// Too many entries for one revision or one batch.
    CapacityExceeded = -6,
    /// The output buffer is too small; the needed size was written.
    BufferTooSmall = -7,
    /// An internal panic was caught.
    Internal = -8,
}

impl From<Error> for MvskipStatus {
    fn from(e: Error) -> Self {
        match e {
            Error::CapacityExceeded(_) => MvskipStatus::CapacityExceeded,
            Error::StaleSnapshot { .. } => MvskipStatus::StaleSnapshot,
            Error::UseAfterUnregister => MvskipStatus::UseAfterUnregister,
            Error::InvalidRange => MvskipStatus::InvalidRange,
            Error::EmptyBatch => MvskipStatus::EmptyBatch,
        }
    }
}

/// An index. Safe to share between threads.
pub struct MvskipIndex {
    inner: SkipIndex<Bytes, Bytes>,
}

/// A registered snapshot. Use from one thread at a time.
pub struct MvskipSnapshot {
    inner: SnapshotHandle,
}

/// Operations collected for one atomic update.
pub struct MvskipBatch {
    inner: Batch<Bytes, Bytes>,
}

/// Called once per scanned entry. Return `false` to stop the scan.
pub type MvskipScanFn = Option<
    unsafe extern "C" fn(
        ctx: *mut c_void,
        key: *const u8,
        key_len: usize,
        value: *const u8,
        value_len: usize,
    ) -> bool,
>;

fn guard(f: impl FnOnce() -> MvskipStatus) -> MvskipStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(MvskipStatus::Internal)
}

unsafe fn bytes<'a>(p: *const u8, len: usize) -> Option<&'a [u8]> {
    if len == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(p, len))
    }
}

/// Copy `v` out, or report the size needed.
unsafe fn copy_out(v: &[u8], out: *mut u8, cap: usize, out_len: *mut usize) -> MvskipStatus {
    *out_len = v.len();
    if v.len() > cap {
        return MvskipStatus::BufferTooSmall;
    }
    if !v.is_empty() {
        if out.is_null() {
            return MvskipStatus::NullArgument;
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
    }
    MvskipStatus::Ok
}

macro_rules! arg {
    ($e:expr) => {
        match $e {
            Some(v) => v,
            None => return MvskipStatus::NullArgument,
        }
    };
}

/// Static description of a status. Never null.
#[no_mangle]
pub extern "C" fn mvskip_status_str(status: MvskipStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        MvskipStatus::Ok => b"ok\0",
        MvskipStatus::NotFound => b"not found\0",
        MvskipStatus::NullArgument => b"null argument\0",
        MvskipStatus::StaleSnapshot => b"snapshot older than the collection horizon\0",
        MvskipStatus::UseAfterUnregister => b"snapshot already released\0",
        MvskipStatus::InvalidRange => b"scan bounds are inverted\0",
        MvskipStatus::EmptyBatch => b"batch is empty\0",
        MvskipStatus::CapacityExceeded => b"capacity exceeded\0",
        MvskipStatus::BufferTooSmall => b"buffer too small\0",
        MvskipStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}

/// A new empty index with adaptive node sizes.
#[no_mangle]
pub extern "C" fn mvskip_index_new() -> *mut MvskipIndex {
    catch_unwind(|| {
        Box::into_raw(Box::new(MvskipIndex {
            inner: SkipIndex::new(),
        }))
    })
    .unwrap_or(ptr::null_mut())
}

/// Free an index. Null is ignored. No other call on it may be running.
///
/// # Safety
/// `index` is null or came from [`mvskip_index_new`] and was not freed.
#[no_mangle]
pub unsafe extern "C" fn mvskip_index_free(index: *mut MvskipIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Insert or overwrite a key.
///
/// # Safety
/// `index` is live; `key` and `value` point to at least their lengths.
#[no_mangle]
pub unsafe extern "C" fn mvskip_put(
    index: *const MvskipIndex,
    key: *const u8,
    key_len: usize,
    value: *const u8,
    value_len: usize,
) -> MvskipStatus {
    let index = arg!(index.as_ref());
    let key = arg!(bytes(key, key_len));
    let value = arg!(bytes(value, value_len));
    guard(|| {
        index.inner.put(key.into(), value.into());
        MvskipStatus::Ok
    })
}

/// Remove a key. Removing an absent key succeeds.
///
/// # Safety
/// As for [`mvskip_put`].
#[no_mangle]
pub unsafe extern "C" fn mvskip_remove(
    index: *const MvskipIndex,
    key: *const u8,
    key_len: usize,
) -> MvskipStatus {
    let index = arg!(index.as_ref());
    let key = arg!(bytes(key, key_len));
    guard(|| {
        index.inner.remove(&Bytes::from(key));
        MvskipStatus::Ok
    })
}

/// Latest value of a key, copied into `out`. `*out_len` receives the value
/// length, also when the buffer is too small.
///
/// # Safety
/// `index` is live, `key` covers `key_len` bytes, `out` covers `out_cap`
/// bytes and `out_len` is writable.
#[no_mangle]
pub unsafe extern "C" fn mvskip_get(
    index: *const MvskipIndex,
    key: *const u8,
    key_len: usize,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> MvskipStatus {
    let index = arg!(index.as_ref());
    let key = arg!(bytes(key, key_len));
    if out_len.is_null() {
        return MvskipStatus::NullArgument;
    }
    guard(|| match index.inner.get(&Bytes::from(key)) {
        Some(v) => copy_out(&v, out, out_cap, out_len),
        None => MvskipStatus::NotFound,
    })
}

/// Register a snapshot of the current state.
///
/// # Safety
/// `index` is live.
#[no_mangle]
pub unsafe extern "C" fn mvskip_snapshot_new(index: *const MvskipIndex) -> *mut MvskipSnapshot {
    let Some(index) = index.as_ref() else {
        return ptr::null_mut();
    };
    catch_unwind(AssertUnwindSafe(|| {
        Box::into_raw(Box::new(MvskipSnapshot {
            inner: index.inner.register(),
        }))
    }))
    .unwrap_or(ptr::null_mut())
}

/// Move a snapshot to the current state.
///
/// # Safety
/// `snapshot` is live and not used concurrently.
#[no_mangle]
pub unsafe extern "C" fn mvskip_snapshot_refresh(snapshot: *mut MvskipSnapshot) -> MvskipStatus {
    let snap = arg!(snapshot.as_mut());
    guard(|| match snap.inner.refresh() {
        Ok(_) => MvskipStatus::Ok,
        Err(e) => e.into(),
    })
}

/// Release a snapshot. Null is ignored.
///
/// # Safety
/// `snapshot` is null or live; it may outlive its index.
#[no_mangle]
pub unsafe extern "C" fn mvskip_snapshot_free(snapshot: *mut MvskipSnapshot) {
    if !snapshot.is_null() {
        drop(Box::from_raw(snapshot));
    }
}

/// Value of a key in a snapshot. Output as for [`mvskip_get`].
///
/// # Safety
/// As for [`mvskip_get`]; `snapshot` is live and registered on `index`.
#[no_mangle]
pub unsafe extern "C" fn mvskip_get_at(
    index: *const MvskipIndex,
    snapshot: *const MvskipSnapshot,
    key: *const u8,
    key_len: usize,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> MvskipStatus {
    let index = arg!(index.as_ref());
    let snap = arg!(snapshot.as_ref());
    let key = arg!(bytes(key, key_len));
    if out_len.is_null() {
        return MvskipStatus::NullArgument;
    }
    guard(
        || match index.inner.get_in(&Bytes::from(key), &snap.inner) {
            Ok(Some(v)) => copy_out(&v, out, out_cap, out_len),
            Ok(None) => MvskipStatus::NotFound,
            Err(e) => e.into(),
        },
    )
}

/// Visit entries with `from <= key < to` in key order. A null `to` scans to
/// the end. A null `snapshot` reads the current state.
///
/// The pointers passed to `f` are valid only during the callback.
///
/// # Safety
/// Handles are live, bounds cover their lengths, and `f` is safe to call
/// with `ctx`.
#[no_mangle]
pub unsafe extern "C" fn mvskip_scan(
    index: *const MvskipIndex,
    snapshot: *const MvskipSnapshot,
    from: *const u8,
    from_len: usize,
    to: *const u8,
    to_len: usize,
    f: MvskipScanFn,
    ctx: *mut c_void,
) -> MvskipStatus {
    let index = arg!(index.as_ref());
    let from = arg!(bytes(from, from_len));
    let f = arg!(f);
    let to = if to.is_null() && to_len == 0 {
        None
    } else {
        Some(Bytes::from(arg!(bytes(to, to_len))))
    };
    guard(|| {
        // A one-off scan still registers, so collection cannot cut under it.
        let temp;
        let snap = match snapshot.as_ref() {
            Some(s) => &s.inner,
            None => {
                temp = index.inner.register();
                &temp
            }
        };
        let v = match snap
            .version()
            .and_then(|v| index.inner.check_snapshot(v).map(|_| v))
        {
            Ok(v) => v,
            Err(e) => return e.into(),
        };
        let from = Bytes::from(from);
        let bound = match &to {
            Some(t) if *t < from => return MvskipStatus::InvalidRange,
            Some(t) => Bound::Excluded(t),
            None => Bound::Unbounded,
        };
        index.inner.scan_with(&from, bound, v, |k, val| {
            f(ctx, k.as_ptr(), k.len(), val.as_ptr(), val.len())
        });
        MvskipStatus::Ok
    })
}

/// A new empty batch.
#[no_mangle]
pub extern "C" fn mvskip_batch_new() -> *mut MvskipBatch {
    Box::into_raw(Box::new(MvskipBatch {
        inner: Batch::new(),
    }))
}

/// Free a batch. Null is ignored.
///
/// # Safety
/// `batch` is null or live.
#[no_mangle]
pub unsafe extern "C" fn mvskip_batch_free(batch: *mut MvskipBatch) {
    if !batch.is_null() {
        drop(Box::from_raw(batch));
    }
}

/// Add a put to the batch. A later operation on the same key replaces it.
///
/// # Safety
/// `batch` is live; `key` and `value` cover their lengths.
#[no_mangle]
pub unsafe extern "C" fn mvskip_batch_put(
    batch: *mut MvskipBatch,
    key: *const u8,
    key_len: usize,
    value: *const u8,
    value_len: usize,
) -> MvskipStatus {
    let batch = arg!(batch.as_mut());
    let key = arg!(bytes(key, key_len));
    let value = arg!(bytes(value, value_len));
    batch.inner.put(key.into(), value.into());
    MvskipStatus::Ok
}

/// Add a remove to the batch.
///
/// # Safety
/// `batch` is live; `key` covers `key_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mvskip_batch_remove(
    batch: *mut MvskipBatch,
    key: *const u8,
    key_len: usize,
) -> MvskipStatus {
    let batch = arg!(batch.as_mut());
    let key = arg!(bytes(key, key_len));
    batch.inner.remove(key.into());
    MvskipStatus::Ok
}

/// Number of distinct keys in the batch.
///
/// # Safety
/// `batch` is null or live.
#[no_mangle]
pub unsafe extern "C" fn mvskip_batch_len(batch: *const MvskipBatch) -> usize {
    batch.as_ref().map_or(0, |b| b.inner.len())
}

/// Apply every operation of the batch atomically. The batch is left empty
/// and may be reused.
///
/// # Safety
/// `index` and `batch` are live.
#[no_mangle]
pub unsafe extern "C" fn mvskip_batch_apply(
    index: *const MvskipIndex,
    batch: *mut MvskipBatch,
) -> MvskipStatus {
    let index = arg!(index.as_ref());
    let batch = arg!(batch.as_mut());
    let ops = std::mem::take(&mut batch.inner);
    guard(|| match index.inner.batch(ops) {
        Ok(()) => MvskipStatus::Ok,
        Err(e) => e.into(),
    })
}
