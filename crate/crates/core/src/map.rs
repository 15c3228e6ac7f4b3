//! Public map operations: updates, latest and snapshot reads, range scans.

use std::ops::Bound;
use std::sync::Arc;

use crate::autoscale::{read_tick, update_weight, Direction, UpdateKind};
use crate::clock::VersionStamp;
use crate::error::{Error, Result};
use crate::hooks::{self, HookPoint};
use crate::node::{upper_of, Node};
use crate::reclaim::{pin, retire, ArcCell, Guard};
use crate::revision::{Entries, Kind, Revision, Stamp};
use crate::skiplist::{IndexKey, IndexValue, SkipIndex};
use crate::snapshot::SnapshotHandle;

impl<K: IndexKey, V: IndexValue> SkipIndex<K, V> {
    /// Insert or overwrite `key`.
    pub fn put(&self, key: K, value: V) {
        let g = pin();
        let w = update_weight();
        let installed = loop {
            let loc = self.locate(&key, true, &g);
            let head = loc.head;
            let entries = head
                .entries
                .with_put(key.clone(), value.clone())
                .expect("node sizes stay below the revision limit");
            let opt = self.clock.optimistic();
            let decision = self.config.autoscale.decide(
                &head.stats,
                head.entries.len(),
                entries.len(),
                loc.node.is_base(),
                Direction::Grow,
            );
            if decision == UpdateKind::Split {
                let lrev = self.split_pair(entries, Stamp::shared(opt), head, || {
                    head.stats.after_update(w)
                });
                if loc
                    .node
                    .head
                    .compare_exchange(head, Some(lrev.clone()), &g)
                    .is_ok()
                {
                    hooks::fire(HookPoint::SplitInstalled);
                    self.help_split(loc.node, &lrev, &g);
                    break lrev;
                }
            } else {
                let rev = Arc::new(Revision::new(
                    Kind::Regular,
                    Stamp::own(opt),
                    entries,
                    Some(unsafe { crate::reclaim::clone_ref(head) }),
                    head.stats.after_update(w),
                ));
                if loc
                    .node
                    .head
                    .compare_exchange(head, Some(rev.clone()), &g)
                    .is_ok()
                {
                    break rev;
                }
            }
        };
        hooks::fire(HookPoint::BeforeFinalize);
        self.finish(&installed, &g);
        self.collect_after(&installed, &g);
    }

    /// Remove `key`. Does nothing if it is absent.
    pub fn remove(&self, key: &K) {
        let g = pin();
        let w = update_weight();
        let installed = loop {
            let loc = self.locate(key, true, &g);
            let head = loc.head;
            if !head.entries.contains(key) {
                return;
            }
            let entries = head.entries.with_remove(key);
            let opt = self.clock.optimistic();
            let decision = self.config.autoscale.decide(
                &head.stats,
                head.entries.len(),
                entries.len(),
                loc.node.is_base(),
                Direction::Shrink,
            );
            if decision == UpdateKind::Merge {
                let mt = Arc::new(Revision::new(
                    Kind::MergeTerminator {
                        merge: ArcCell::null(),
                    },
                    Stamp::shared(opt),
                    entries,
                    Some(unsafe { crate::reclaim::clone_ref(head) }),
                    head.stats.after_update(w),
                ));
                if loc
                    .node
                    .head
                    .compare_exchange(head, Some(mt.clone()), &g)
                    .is_ok()
                {
                    hooks::fire(HookPoint::TerminatorInstalled);
                    break self.help_merge(loc.node, &mt, &g);
                }
            } else {
                let rev = Arc::new(Revision::new(
                    Kind::Regular,
                    Stamp::own(opt),
                    entries,
                    Some(unsafe { crate::reclaim::clone_ref(head) }),
                    head.stats.after_update(w),
                ));
                if loc
                    .node
                    .head
                    .compare_exchange(head, Some(rev.clone()), &g)
                    .is_ok()
                {
                    break rev;
                }
            }
        };
        hooks::fire(HookPoint::BeforeFinalize);
        self.finish(&installed, &g);
        self.collect_after(&installed, &g);
    }

    pub(crate) fn collect_after(&self, rev: &Revision<K, V>, g: &Guard) {
        self.collect_garbage(rev, g);
        if let Kind::LeftSplit { right, .. } = &rev.kind {
            self.collect_garbage(right, g);
        }
    }

    fn note_read(&self, rev: &Revision<K, V>) {
        if let Some(t) = read_tick(self.config.autoscale.read_cadence) {
            rev.stats.record_read(t);
        }
    }

    /// Latest value of `key`. Never waits for or helps pending writes.
    pub fn get(&self, key: &K) -> Option<V> {
        let g = pin();
        'retry: loop {
            let loc = self.locate(key, false, &g);
            self.note_read(loc.head);
            let mut r = loc.head;
            loop {
                if r.version().is_final() {
                    return r.entries.lookup(key).cloned();
                }
                match r.successor_for(key, &g) {
                    Some(n) => r = n,
                    None if r.version().is_final() => return r.entries.lookup(key).cloned(),
                    None => continue 'retry,
                }
            }
        }
    }

    /// Current time as a snapshot version. It stays readable only while a
    /// registered handle at or below it exists, or until the next
    /// collection horizon passes it.
    pub fn now(&self) -> VersionStamp {
        self.clock.now()
    }

    /// Register a long-lived snapshot.
    pub fn register(&self) -> SnapshotHandle {
        SnapshotHandle::register(&self.registry)
    }

    /// Registered handles with a version set.
    pub fn registered_snapshots(&self) -> usize {
        self.registry.registered()
    }

    /// Fails if `snap` can no longer be read.
    pub fn check_snapshot(&self, snap: VersionStamp) -> Result<()> {
        let horizon = self.horizon();
        if snap < horizon || !snap.is_final() {
            return Err(Error::StaleSnapshot {
                snapshot: snap,
                horizon,
            });
        }
        Ok(())
    }

    /// Value of `key` at snapshot `snap`.
    pub fn get_at(&self, key: &K, snap: VersionStamp) -> Result<Option<V>> {
        self.check_snapshot(snap)?;
        let g = pin();
        let loc = self.locate(key, false, &g);
        self.note_read(loc.head);
        let r = self.select(loc.node, loc.head, key, snap, &g);
        Ok(r.and_then(|r| r.entries.lookup(key).cloned()))
    }

    /// Value of `key` in the snapshot held by `handle`.
    pub fn get_in(&self, key: &K, handle: &SnapshotHandle) -> Result<Option<V>> {
        self.get_at(key, handle.version()?)
    }

    /// Newest revision on `key`'s path whose final version is `<= snap`,
    /// helping pending ones the snapshot might have to include.
    fn select<'g>(
        &'g self,
        node: &Node<K, V>,
        head: &'g Revision<K, V>,
        key: &K,
        snap: VersionStamp,
        g: &'g Guard,
    ) -> Option<&'g Revision<K, V>> {
        let mut r = head;
        let mut at_head = true;
        loop {
            let mut v = r.version();
            if v.is_pending() && v.magnitude() <= snap.raw() {
                if at_head {
                    v = self.help_pending(node, r, g);
                } else {
                    v = self.finish(r, g);
                }
            }
            if v.is_final() && v <= snap {
                return Some(r);
            }
            r = r.successor_for(key, g)?;
            at_head = false;
        }
    }

    /// Entries with keys in `[from, to)` at snapshot `snap`.
    pub fn scan(&self, from: &K, to: &K, snap: VersionStamp) -> Result<Vec<(K, V)>> {
        self.check_snapshot(snap)?;
        if from > to {
            return Err(Error::InvalidRange);
        }
        let mut out = Vec::new();
        if from == to {
            return Ok(out);
        }
        self.scan_with(from, Bound::Excluded(to), snap, |k, v| {
            out.push((k.clone(), v.clone()));
            true
        });
        Ok(out)
    }

    /// Scan in the snapshot held by `handle`.
    pub fn scan_in(&self, from: &K, to: &K, handle: &SnapshotHandle) -> Result<Vec<(K, V)>> {
        self.scan(from, to, handle.version()?)
    }

    /// Up to `n` entries starting at `from`, at snapshot `snap`.
    pub fn scan_n(&self, from: &K, n: usize, snap: VersionStamp) -> Result<Vec<(K, V)>> {
        self.check_snapshot(snap)?;
        let mut out = Vec::with_capacity(n.min(1 << 16));
        if n == 0 {
            return Ok(out);
        }
        self.scan_with(from, Bound::Unbounded, snap, |k, v| {
            out.push((k.clone(), v.clone()));
            out.len() < n
        });
        Ok(out)
    }

    /// Visit entries in `[from, to)` in key order until `f` returns false.
    pub fn scan_with<F>(&self, from: &K, to: Bound<&K>, snap: VersionStamp, f: F)
    where
        F: FnMut(&K, &V) -> bool,
    {
        self.scan_from(Some(from), to, snap, f)
    }

    fn scan_from<F>(&self, from: Option<&K>, to: Bound<&K>, snap: VersionStamp, mut f: F)
    where
        F: FnMut(&K, &V) -> bool,
    {
        let g = pin();
        let mut cursor = from.cloned();
        let mut buf = Vec::new();
        loop {
            let loc = match &cursor {
                Some(c) => self.locate(c, false, &g),
                None => self.locate_base(&g),
            };
            self.note_read(loc.head);
            let upper = upper_of(loc.next).cloned();
            buf.clear();
            self.collect_at(
                Some(loc.node),
                loc.head,
                snap,
                cursor.as_ref(),
                upper.as_ref(),
                &mut buf,
                &g,
            );
            for (k, v) in &buf {
                let inside = match to {
                    Bound::Excluded(t) => *k < t,
                    Bound::Included(t) => *k <= t,
                    Bound::Unbounded => true,
                };
                if !inside || !f(k, v) {
                    return;
                }
            }
            match upper {
                Some(u) => {
                    let past = match to {
                        Bound::Excluded(t) => &u >= t,
                        Bound::Included(t) => &u > t,
                        Bound::Unbounded => false,
                    };
                    if past {
                        return;
                    }
                    cursor = Some(u);
                }
                None => return,
            }
        }
    }

    /// Append the entries in `[lo, hi)` that are visible at `snap`, starting
    /// from `rev`. Passing a merge revision that is too new combines its two
    /// branches, which yields the bulk revision for the range.
    #[allow(clippy::too_many_arguments)]
    fn collect_at<'g>(
        &'g self,
        node: Option<&Node<K, V>>,
        rev: &'g Revision<K, V>,
        snap: VersionStamp,
        lo: Option<&K>,
        hi: Option<&K>,
        out: &mut Vec<(&'g K, &'g V)>,
        g: &'g Guard,
    ) {
        let mut r = rev;
        let mut node = node;
        loop {
            let mut v = r.version();
            if v.is_pending() && v.magnitude() <= snap.raw() {
                v = match node {
                    Some(n) => self.help_pending(n, r, g),
                    None => self.finish(r, g),
                };
            }
            if v.is_final() && v <= snap {
                let (a, b) = r.entries.bounds(lo, hi);
                out.extend(r.entries.keys()[a..b].iter().zip(&r.entries.values()[a..b]));
                return;
            }
            node = None;
            if let Kind::Merge { .. } = &r.kind {
                let bulk = self.build_bulk(r, snap, lo, hi, g);
                out.extend(bulk.entries.iter());
                return;
            }
            match r.next.load(g) {
                Some(n) => r = n,
                None => return,
            }
        }
    }

    /// Combine both branches of a merge revision that is newer than `snap`
    /// into one read-only revision holding `[lo, hi)` as of `snap`. The
    /// result lives until `g` is dropped.
    fn build_bulk<'g>(
        &'g self,
        merge: &'g Revision<K, V>,
        snap: VersionStamp,
        lo: Option<&K>,
        hi: Option<&K>,
        g: &'g Guard,
    ) -> &'g Revision<K, V> {
        let Kind::Merge {
            right_next,
            right_key,
            ..
        } = &merge.kind
        else {
            unreachable!("bulk revisions are only built at merges");
        };
        let mut parts = Vec::new();
        if lo.is_none_or(|l| l < right_key) {
            let left_hi = match hi {
                Some(h) if h <= right_key => h,
                _ => right_key,
            };
            if let Some(n) = merge.next.load(g) {
                self.collect_at(None, n, snap, lo, Some(left_hi), &mut parts, g);
            }
        }
        if hi.is_none_or(|h| h > right_key) {
            let right_lo = match lo {
                Some(l) if l >= right_key => l,
                _ => right_key,
            };
            if let Some(rn) = right_next.load(g) {
                self.collect_at(None, rn, snap, Some(right_lo), hi, &mut parts, g);
            }
        }
        let entries = Entries::build(
            parts
                .into_iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            self.config.hasher,
        )
        .expect("a bulk revision never exceeds its node");
        let bulk = Arc::new(Revision::new(
            Kind::Bulk,
            Stamp::own(snap),
            entries,
            None,
            Default::default(),
        ));
        // SAFETY: the allocation is only released after `g` unpins.
        let r = unsafe { &*Arc::as_ptr(&bulk) };
        retire(g, bulk);
        r
    }

    /// A bulk revision: the contents of `[lo, hi)` at `snap` as one sorted
    /// array, built by walking the revision list of the node covering `lo`.
    pub fn bulk_at(&self, lo: &K, hi: Option<&K>, snap: VersionStamp) -> Result<Entries<K, V>> {
        self.check_snapshot(snap)?;
        let g = pin();
        let loc = self.locate(lo, false, &g);
        let upper = upper_of(loc.next);
        let hi = match (hi, upper) {
            (Some(h), Some(u)) => Some(if h < u { h } else { u }),
            (h, u) => h.or(u),
        };
        let mut buf = Vec::new();
        self.collect_at(Some(loc.node), loc.head, snap, Some(lo), hi, &mut buf, &g);
        Entries::build(
            buf.into_iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            self.config.hasher,
        )
    }

    /// Length of the revision list of the node covering `key`.
    pub fn revision_count(&self, key: &K) -> usize {
        let g = pin();
        let loc = self.locate(key, false, &g);
        let mut n = 0;
        let mut r = Some(loc.head);
        while let Some(rev) = r {
            n += 1;
            r = rev.next.load(&g);
        }
        n
    }

    /// Key of the node whose range holds `key`; `None` for the base node.
    pub fn covering_node(&self, key: &K) -> Option<K> {
        let g = pin();
        self.locate(key, false, &g).node.key.clone()
    }

    /// Stats of the head revision covering `key`: (read share, update share).
    pub fn head_stats(&self, key: &K) -> (f64, f64) {
        let g = pin();
        let loc = self.locate(key, false, &g);
        (loc.head.stats.p_reads(), loc.head.stats.p_updates())
    }

    /// The whole map at the current time.
    pub fn to_vec(&self) -> Vec<(K, V)> {
        let mut out = Vec::new();
        self.scan_from(None, Bound::Unbounded, self.clock.now(), |k, v| {
            out.push((k.clone(), v.clone()));
            true
        });
        out
    }
}
