//! Snapshot registration and the collection horizon.
//!
//! Long-running readers register a handle so that the revisions they may
//! still read are kept. The registry is a lock-free, append-only list of
//! reusable slots; a slot is only freed when the registry itself is dropped.

use std::ptr;
use std::sync::atomic::{AtomicBool, AtomicI64, AtomicPtr, Ordering};
use std::sync::Arc;

use crate::clock::{Clock, VersionStamp};
use crate::error::{Error, Result};

struct Slot {
    in_use: AtomicBool,
    /// Registered snapshot version, `0` while unset.
    version: AtomicI64,
    next: *mut Slot,
}

pub(crate) struct Registry {
    clock: Clock,
    head: AtomicPtr<Slot>,
}

// SAFETY: slots are only reached through atomics and never freed before the
// registry.
unsafe impl Send for Registry {}
unsafe impl Sync for Registry {}

impl Registry {
    pub(crate) fn new(clock: Clock) -> Self {
        Registry {
            clock,
            head: AtomicPtr::new(ptr::null_mut()),
        }
    }

    fn slots(&self) -> impl Iterator<Item = &Slot> {
        let mut cur = self.head.load(Ordering::SeqCst);
        std::iter::from_fn(move || {
            // SAFETY: slots live as long as the registry.
            let slot = unsafe { cur.as_ref()? };
            cur = slot.next;
            Some(slot)
        })
    }

    fn acquire_slot(&self) -> &Slot {
        for slot in self.slots() {
            if !slot.in_use.load(Ordering::Relaxed)
                && slot
                    .in_use
                    .compare_exchange(false, true, Ordering::SeqCst, Ordering::Relaxed)
                    .is_ok()
            {
                return slot;
            }
        }
        let fresh = Box::into_raw(Box::new(Slot {
            in_use: AtomicBool::new(true),
            version: AtomicI64::new(1),
            next: ptr::null_mut(),
        }));
        let mut head = self.head.load(Ordering::SeqCst);
        loop {
            // SAFETY: `fresh` is not yet shared.
            unsafe { (*fresh).next = head };
            match self
                .head
                .compare_exchange(head, fresh, Ordering::SeqCst, Ordering::SeqCst)
            {
                Ok(_) => return unsafe { &*fresh },
                Err(h) => head = h,
            }
        }
    }

    /// Oldest version any registered reader may still need: the minimum of
    /// the clock (read first) and every registered stamp.
    pub(crate) fn horizon(&self) -> VersionStamp {
        let mut min = self.clock.now().raw();
        for slot in self.slots() {
            if slot.in_use.load(Ordering::SeqCst) {
                let v = slot.version.load(Ordering::SeqCst);
                if v > 0 {
                    min = min.min(v);
                }
            }
        }
        VersionStamp::from_raw(min)
    }

    pub(crate) fn registered(&self) -> usize {
        self.slots()
            .filter(|s| s.in_use.load(Ordering::SeqCst) && s.version.load(Ordering::SeqCst) > 0)
            .count()
    }

    #[cfg(test)]
    pub(crate) fn allocated_slots(&self) -> usize {
        self.slots().count()
    }
}

impl Drop for Registry {
    fn drop(&mut self) {
        let mut cur = *self.head.get_mut();
        while !cur.is_null() {
            // SAFETY: we own every slot once the registry is unreachable.
            let slot = unsafe { Box::from_raw(cur) };
            cur = slot.next;
        }
    }
}

/// A registered snapshot. Revisions visible at its version are kept until it
/// is refreshed to a newer version or unregistered (also on drop).
pub struct SnapshotHandle {
    registry: Arc<Registry>,
    slot: *const Slot,
    version: VersionStamp,
    active: bool,
}

// SAFETY: the slot is only touched through atomics and outlives the handle
// because the handle keeps the registry alive.
unsafe impl Send for SnapshotHandle {}
unsafe impl Sync for SnapshotHandle {}

impl SnapshotHandle {
    pub(crate) fn register(registry: &Arc<Registry>) -> Self {
        let slot = registry.acquire_slot();
        // Hold the horizon down while the real stamp is read, so a
        // concurrent horizon scan cannot pass it.
        slot.version.store(1, Ordering::SeqCst);
        let version = registry.clock.now();
        slot.version.store(version.raw(), Ordering::SeqCst);
        SnapshotHandle {
            registry: registry.clone(),
            slot,
            version,
            active: true,
        }
    }

    fn slot(&self) -> &Slot {
        // SAFETY: see the `Send` impl.
        unsafe { &*self.slot }
    }

    /// The version reads through this handle observe.
    pub fn version(&self) -> Result<VersionStamp> {
        if self.active {
            Ok(self.version)
        } else {
            Err(Error::UseAfterUnregister)
        }
    }

    /// Move the handle to the current time.
    pub fn refresh(&mut self) -> Result<VersionStamp> {
        if !self.active {
            return Err(Error::UseAfterUnregister);
        }
        let v = self.registry.clock.now();
        self.slot().version.store(v.raw(), Ordering::SeqCst);
        self.version = v;
        Ok(v)
    }

    /// Release the handle. Further use returns `UseAfterUnregister`.
    pub fn unregister(&mut self) {
        if self.active {
            self.active = false;
            self.slot().version.store(0, Ordering::SeqCst);
            self.slot().in_use.store(false, Ordering::SeqCst);
        }
    }

    pub fn is_active(&self) -> bool {
        self.active
    }
}

impl Drop for SnapshotHandle {
    fn drop(&mut self) {
        self.unregister();
    }
}

impl std::fmt::Debug for SnapshotHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SnapshotHandle")
            .field("version", &self.version)
            .field("active", &self.active)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_tracks_oldest_registered() {
        let clock = Clock::new();
        let reg = Arc::new(Registry::new(clock));
        let mut a = SnapshotHandle::register(&reg);
        let va = a.version().unwrap();
        let b = SnapshotHandle::register(&reg);
        assert!(b.version().unwrap() >= va);
        assert_eq!(reg.horizon(), va);
        let fresh = a.refresh().unwrap();
        assert_eq!(reg.horizon(), b.version().unwrap().min(fresh));
        drop(b);
        a.unregister();
        assert!(reg.horizon() > fresh);
        assert_eq!(reg.registered(), 0);
    }

    #[test]
    fn use_after_unregister_is_rejected() {
        let reg = Arc::new(Registry::new(Clock::new()));
        let mut h = SnapshotHandle::register(&reg);
        h.unregister();
        assert_eq!(h.version(), Err(Error::UseAfterUnregister));
        assert_eq!(h.refresh(), Err(Error::UseAfterUnregister));
        h.unregister();
    }

    #[test]
    fn slots_are_reused() {
        let reg = Arc::new(Registry::new(Clock::new()));
        for _ in 0..100 {
            let h = SnapshotHandle::register(&reg);
            drop(h);
        }
        assert_eq!(reg.allocated_slots(), 1);
    }

    #[test]
    fn concurrent_registration() {
        let reg = Arc::new(Registry::new(Clock::new()));
        let threads: Vec<_> = (0..8)
            .map(|_| {
                let reg = reg.clone();
                std::thread::spawn(move || {
                    for _ in 0..500 {
                        let mut h = SnapshotHandle::register(&reg);
                        assert!(h.version().unwrap() <= reg.clock.now());
                        h.refresh().unwrap();
                    }
                })
            })
            .collect();
        for t in threads {
            t.join().unwrap();
        }
        assert_eq!(reg.registered(), 0);
        assert!(reg.allocated_slots() <= 8);
    }
}
