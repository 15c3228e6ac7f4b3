//! Memory reclamation for everything the index unlinks.
//!
//! Shared objects (revisions, nodes) are reference counted, and every atomic
//! slot that points at one owns a strong count. When a slot is overwritten the
//! count it owned is not dropped immediately: the decrement is deferred
//! through the epoch collector until every thread that was pinned at that
//! moment has unpinned. A reader that loaded a raw pointer from a slot while
//! pinned can therefore dereference it for as long as its guard lives, no
//! matter how many other slots the object is reachable from.

use std::marker::PhantomData;
use std::ptr;
use std::sync::atomic::{AtomicPtr, AtomicUsize, Ordering};
use std::sync::Arc;

pub use crossbeam_epoch::Guard;

static RETIRED: AtomicUsize = AtomicUsize::new(0);
static RELEASED: AtomicUsize = AtomicUsize::new(0);

/// Pins the current thread. Every index operation runs under a guard.
#[inline]
pub fn pin() -> Guard {
    crossbeam_epoch::pin()
}

/// Defers dropping `obj` until no thread pinned now can still observe it.
///
/// `obj` must already be unreachable from every shared slot, or be a count
/// whose slot was just overwritten.
pub fn retire<T: Send + Sync + 'static>(guard: &Guard, obj: Arc<T>) {
    RETIRED.fetch_add(1, Ordering::Relaxed);
    guard.defer(move || {
        drop(obj);
        RELEASED.fetch_add(1, Ordering::Relaxed);
    });
}

/// Pushes this thread's deferred work to the collector and tries to advance
/// the epoch. Returns how many retired objects were released process-wide
/// while it ran.
pub fn collect() -> usize {
    let before = RELEASED.load(Ordering::Relaxed);
    let guard = pin();
    guard.flush();
    drop(guard);
    RELEASED.load(Ordering::Relaxed).saturating_sub(before)
}

/// Retired objects whose release has not run yet (process-wide).
pub fn outstanding() -> usize {
    RETIRED
        .load(Ordering::Relaxed)
        .saturating_sub(RELEASED.load(Ordering::Relaxed))
}

pub fn retired_total() -> usize {
    RETIRED.load(Ordering::Relaxed)
}

pub fn released_total() -> usize {
    RELEASED.load(Ordering::Relaxed)
}

/// An atomic, nullable `Arc<T>` slot.
pub(crate) struct ArcCell<T> {
    ptr: AtomicPtr<T>,
    _owns: PhantomData<Arc<T>>,
}

unsafe impl<T: Send + Sync> Send for ArcCell<T> {}
unsafe impl<T: Send + Sync> Sync for ArcCell<T> {}

#[inline]
fn into_raw<T>(value: Option<Arc<T>>) -> *mut T {
    value.map_or(ptr::null_mut(), |a| Arc::into_raw(a) as *mut T)
}

impl<T> ArcCell<T> {
    pub(crate) fn new(value: Option<Arc<T>>) -> Self {
        ArcCell {
            ptr: AtomicPtr::new(into_raw(value)),
            _owns: PhantomData,
        }
    }

    pub(crate) fn null() -> Self {
        Self::new(None)
    }

    #[inline]
    pub(crate) fn load_ptr(&self) -> *const T {
        self.ptr.load(Ordering::Acquire)
    }

    /// Borrow the current target for the lifetime of `guard`.
    #[inline]
    pub(crate) fn load<'g>(&self, _guard: &'g Guard) -> Option<&'g T> {
        let p = self.ptr.load(Ordering::Acquire);
        // SAFETY: the slot owns a strong count for `p`; if the slot is
        // overwritten after this load the release is deferred past `guard`.
        unsafe { p.as_ref() }
    }

    /// Take a new strong reference to the current target.
    #[inline]
    pub(crate) fn load_arc(&self, guard: &Guard) -> Option<Arc<T>> {
        self.load(guard).map(|r| unsafe { clone_ref(r) })
    }

    #[inline]
    pub(crate) fn is_null(&self) -> bool {
        self.load_ptr().is_null()
    }

    /// Replace `current` with `new`. On success the old count is retired.
    /// On failure `new` is handed back.
    pub(crate) fn compare_exchange(
        &self,
        current: *const T,
        new: Option<Arc<T>>,
        guard: &Guard,
    ) -> Result<(), Option<Arc<T>>>
    where
        T: Send + Sync + 'static,
    {
        let raw = into_raw(new);
        match self
            .ptr
            .compare_exchange(current as *mut T, raw, Ordering::AcqRel, Ordering::Acquire)
        {
            Ok(old) => {
                if !old.is_null() {
                    // SAFETY: the slot owned this count.
                    retire(guard, unsafe { Arc::from_raw(old) });
                }
                Ok(())
            }
            Err(_) => Err(if raw.is_null() {
                None
            } else {
                // SAFETY: `raw` came from `into_raw` above and was not published.
                Some(unsafe { Arc::from_raw(raw) })
            }),
        }
    }

    pub(crate) fn store(&self, new: Option<Arc<T>>, guard: &Guard)
    where
        T: Send + Sync + 'static,
    {
        let old = self.ptr.swap(into_raw(new), Ordering::AcqRel);
        if !old.is_null() {
            retire(guard, unsafe { Arc::from_raw(old) });
        }
    }

    /// Detach the target without deferring. Only valid when the owner of the
    /// slot is itself unreachable (during `Drop`).
    pub(crate) fn take_owned(&mut self) -> Option<Arc<T>> {
        let p = std::mem::replace(self.ptr.get_mut(), ptr::null_mut());
        if p.is_null() {
            None
        } else {
            Some(unsafe { Arc::from_raw(p) })
        }
    }
}

impl<T> Drop for ArcCell<T> {
    fn drop(&mut self) {
        drop(self.take_owned());
    }
}

/// Clone an `Arc` from a reference that is known to point into an `Arc`
/// allocation held alive by the caller's guard.
///
/// # Safety
/// `r` must have been obtained from an `ArcCell` (or an `Arc`) and still be
/// protected by a guard or by another strong count.
#[inline]
pub(crate) unsafe fn clone_ref<T>(r: &T) -> Arc<T> {
    let p = r as *const T;
    Arc::increment_strong_count(p);
    Arc::from_raw(p)
}
