//! Revision-size policy.
//!
//! Each revision carries two time-weighted moving averages, one for reads
//! and one for updates. Their ratio picks a target revision size on a linear
//! scale between `min_size` and `max_size`; an update that would push a node
//! past `split_factor * target` splits it, and a shrinking update that drops
//! it below `merge_factor * target` merges it into its predecessor.

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;
use std::time::Instant;

/// What an update should do to the node it lands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateKind {
    Regular,
    Split,
    Merge,
}

/// Whether an update may grow or shrink the node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Single put: may split, never merges.
    Grow,
    /// Single remove: may merge, never splits.
    Shrink,
    /// Batch: either, depending on the size change.
    Either,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoscaleConfig {
    pub min_size: usize,
    pub max_size: usize,
    pub split_factor: f64,
    pub merge_factor: f64,
    /// A reader records its pressure once per this many reads.
    pub read_cadence: u32,
}

impl Default for AutoscaleConfig {
    fn default() -> Self {
        AutoscaleConfig {
            min_size: 25,
            max_size: 300,
            split_factor: 1.5,
            merge_factor: 0.5,
            read_cadence: 100,
        }
    }
}

impl AutoscaleConfig {
    /// Pin the target to one size, regardless of workload. Handy for
    /// deterministic fixtures.
    pub fn fixed(size: usize) -> Self {
        AutoscaleConfig {
            min_size: size,
            max_size: size,
            ..Default::default()
        }
    }

    /// `min + round((max - min) * r)` with `r = reads / (reads + updates)`.
    pub fn target_size(&self, p_reads: f64, p_updates: f64) -> usize {
        let total = p_reads + p_updates;
        let r = if total > 0.0 && total.is_finite() {
            (p_reads / total).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let span = self.max_size.saturating_sub(self.min_size) as f64;
        self.min_size + (span * r).round() as usize
    }

    pub fn split_threshold(&self, target: usize) -> usize {
        (self.split_factor * target as f64).ceil() as usize
    }

    pub fn merge_threshold(&self, target: usize) -> usize {
        (self.merge_factor * target as f64).floor() as usize
    }

    pub fn decide(
        &self,
        stats: &RevisionStats,
        size_before: usize,
        size_after: usize,
        is_base: bool,
        direction: Direction,
    ) -> UpdateKind {
        let target = self.target_size(stats.p_reads(), stats.p_updates());
        let may_split = direction != Direction::Shrink;
        let may_merge = direction != Direction::Grow && size_after < size_before;
        if may_split && size_after > self.split_threshold(target) && size_after >= 2 {
            UpdateKind::Split
        } else if may_merge && !is_base && size_after < self.merge_threshold(target) {
            UpdateKind::Merge
        } else {
            UpdateKind::Regular
        }
    }
}

/// Moving averages stored in a revision. Written without synchronization;
/// concurrent writers may lose each other's samples.
#[derive(Debug, Default)]
pub struct RevisionStats {
    reads: AtomicU64,
    updates: AtomicU64,
}

impl RevisionStats {
    pub fn new(p_reads: f64, p_updates: f64) -> Self {
        RevisionStats {
            reads: AtomicU64::new(p_reads.to_bits()),
            updates: AtomicU64::new(p_updates.to_bits()),
        }
    }

    pub fn p_reads(&self) -> f64 {
        f64::from_bits(self.reads.load(Ordering::Relaxed))
    }

    pub fn p_updates(&self) -> f64 {
        f64::from_bits(self.updates.load(Ordering::Relaxed))
    }

    pub fn set(&self, p_reads: f64, p_updates: f64) {
        self.reads.store(p_reads.to_bits(), Ordering::Relaxed);
        self.updates.store(p_updates.to_bits(), Ordering::Relaxed);
    }

    /// Stats for a revision created by an update on top of `self`.
    pub fn after_update(&self, t: f64) -> RevisionStats {
        let (p, u) = on_update(self.p_reads(), self.p_updates(), t);
        RevisionStats::new(p, u)
    }

    /// Copy with both averages multiplied by `f`. Splits hand each half
    /// half of the parent's time, so the totals over a key range stay put.
    pub fn scaled(&self, f: f64) -> RevisionStats {
        RevisionStats::new(self.p_reads() * f, self.p_updates() * f)
    }

    /// Stats of a merge: the time spent in both ranges.
    pub fn combined(&self, other: &RevisionStats) -> RevisionStats {
        RevisionStats::new(
            self.p_reads() + other.p_reads(),
            self.p_updates() + other.p_updates(),
        )
    }

    /// Fold a read sample into these stats.
    pub fn record_read(&self, t: f64) {
        let (p, u) = on_read(self.p_reads(), self.p_updates(), t);
        self.set(p, u);
    }
}

/// `(pReads, pUpdates)` after an update with weight `t`.
pub fn on_update(p_reads: f64, p_updates: f64, t: f64) -> (f64, f64) {
    let t = clamp_weight(t);
    ((1.0 - t) * p_reads, t + (1.0 - t) * p_updates)
}

/// `(pReads, pUpdates)` after a read sample with weight `t`.
pub fn on_read(p_reads: f64, p_updates: f64, t: f64) -> (f64, f64) {
    let t = clamp_weight(t);
    (t + (1.0 - t) * p_reads, (1.0 - t) * p_updates)
}

/// Weights live in `(0, 1]`.
pub fn clamp_weight(t: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    t.clamp(f64::MIN_POSITIVE, 1.0)
}

fn epoch() -> Instant {
    static START: OnceLock<Instant> = OnceLock::new();
    *START.get_or_init(Instant::now)
}

fn nanos_now() -> u64 {
    epoch().elapsed().as_nanos() as u64
}

thread_local! {
    static LAST_UPDATE: Cell<u64> = const { Cell::new(0) };
    static READS: Cell<(u32, u64)> = const { Cell::new((0, 0)) };
}

/// Seconds since this thread's previous update, clamped to `(0, 1]`.
pub(crate) fn update_weight() -> f64 {
    let now = nanos_now();
    let prev = LAST_UPDATE.with(|c| c.replace(now));
    clamp_weight(now.saturating_sub(prev) as f64 * 1e-9)
}

/// Counts one read on this thread. Every `cadence` reads returns the time
/// (in seconds) those reads took; the caller then records it.
pub(crate) fn read_tick(cadence: u32) -> Option<f64> {
    READS.with(|c| {
        let (count, since) = c.get();
        let count = count + 1;
        if count < cadence.max(1) {
            c.set((count, since));
            return None;
        }
        let now = nanos_now();
        c.set((0, now));
        Some(clamp_weight(now.saturating_sub(since) as f64 * 1e-9))
    })
}
