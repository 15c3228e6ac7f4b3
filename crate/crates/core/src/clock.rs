//! Logical timestamps for revisions and snapshots.
//!
//! Every stamp is read from a process-wide monotonic nanosecond clock,
//! shifted so the first reading after the clock is built is at least 1.
//! Pending updates carry a negative *optimistic* stamp `-(t + 1)`; the final
//! stamp chosen later is never smaller than its magnitude, and is only
//! published once the clock has caught up with it. A snapshot taken after an
//! update returned therefore always covers that update.

use std::fmt;
use std::time::Instant;

/// Signed logical timestamp. Negative values are pending, positive values
/// are final, zero means "not assigned yet".
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VersionStamp(i64);

impl VersionStamp {
    pub const UNSET: VersionStamp = VersionStamp(0);

    #[inline]
    pub const fn from_raw(raw: i64) -> Self {
        VersionStamp(raw)
    }

    #[inline]
    pub const fn raw(self) -> i64 {
        self.0
    }

    #[inline]
    pub const fn is_pending(self) -> bool {
        self.0 < 0
    }

    #[inline]
    pub const fn is_final(self) -> bool {
        self.0 > 0
    }

    #[inline]
    pub const fn magnitude(self) -> i64 {
        self.0.abs()
    }
}

impl fmt::Debug for VersionStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 < 0 {
            write!(f, "~{}", -self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for VersionStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Source of version stamps for one index.
#[derive(Debug, Clone, Copy)]
pub struct Clock {
    origin: Instant,
}

impl Default for Clock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock {
    pub fn new() -> Self {
        Clock {
            origin: Instant::now(),
        }
    }

    /// Current reading, always `>= 1`.
    #[inline]
    pub fn now(&self) -> VersionStamp {
        VersionStamp(self.elapsed_nanos() + 1)
    }

    /// Nanoseconds since construction. Saturates after ~292 years.
    #[inline]
    pub fn elapsed_nanos(&self) -> i64 {
        i64::try_from(self.origin.elapsed().as_nanos()).unwrap_or(i64::MAX - 1)
    }

    /// A fresh optimistic stamp: `-(now + 1)`.
    #[inline]
    pub fn optimistic(&self) -> VersionStamp {
        optimistic_from(self.now())
    }

    /// Picks the final stamp for an update that started with `opt` and does
    /// not return until the clock has reached it.
    pub fn choose_final(&self, opt: VersionStamp) -> VersionStamp {
        debug_assert!(opt.is_pending(), "choose_final on {opt:?}");
        let fin = final_from(self.now(), opt);
        self.wait_until(fin);
        fin
    }

    /// Spins until `now() >= stamp`. In practice returns immediately.
    pub fn wait_until(&self, stamp: VersionStamp) {
        while self.now() < stamp {
            std::hint::spin_loop();
        }
    }
}

/// `-(reading + 1)`.
#[inline]
pub(crate) fn optimistic_from(reading: VersionStamp) -> VersionStamp {
    VersionStamp(-(reading.0 + 1))
}

/// `max(reading, |opt|)`.
#[inline]
pub(crate) fn final_from(reading: VersionStamp, opt: VersionStamp) -> VersionStamp {
    VersionStamp(reading.0.max(opt.magnitude()))
}
