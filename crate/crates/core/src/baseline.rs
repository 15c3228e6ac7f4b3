//! A common interface over ordered indexes and a coarse-locked reference
//! implementation of it.
//!
//! The reference map keeps its whole state in one `BTreeMap` behind a
//! read-write lock and takes snapshots by sharing the current tree
//! (copy-on-write on the next update). It is slow under contention but
//! obviously correct, which makes it useful as a comparator in tests and
//! benchmarks.

use std::collections::BTreeMap;
use std::ops::Bound;
use std::sync::{Arc, RwLock};

use crate::batch::Batch;
use crate::revision::Op;
use crate::skiplist::{IndexKey, IndexValue, SkipIndex};
use crate::snapshot::SnapshotHandle;

/// Operations shared by every index the benchmark and tests drive.
pub trait OrderedIndex<K, V>: Send + Sync {
    type Snapshot: Send;

    fn name(&self) -> &'static str;
    fn put(&self, key: K, value: V);
    fn remove(&self, key: &K);
    fn apply(&self, batch: Batch<K, V>);
    fn get(&self, key: &K) -> Option<V>;

    fn snapshot(&self) -> Self::Snapshot;
    /// Move `snap` to the current state.
    fn refresh(&self, snap: &mut Self::Snapshot);
    fn get_at(&self, snap: &Self::Snapshot, key: &K) -> Option<V>;
    /// Entries in `[from, to)`.
    fn scan_at(&self, snap: &Self::Snapshot, from: &K, to: &K) -> Vec<(K, V)>;
    /// Visit up to `n` entries from `from` on; returns how many were seen.
    fn scan_n_at(
        &self,
        snap: &Self::Snapshot,
        from: &K,
        n: usize,
        f: &mut dyn FnMut(&K, &V),
    ) -> usize;
}

impl<K: IndexKey, V: IndexValue> OrderedIndex<K, V> for SkipIndex<K, V> {
    type Snapshot = SnapshotHandle;

    fn name(&self) -> &'static str {
        "mvskip"
    }

    fn put(&self, key: K, value: V) {
        SkipIndex::put(self, key, value)
    }

    fn remove(&self, key: &K) {
        SkipIndex::remove(self, key)
    }

    fn apply(&self, batch: Batch<K, V>) {
        if !batch.is_empty() {
            SkipIndex::batch(self, batch).expect("batch within limits");
        }
    }

    fn get(&self, key: &K) -> Option<V> {
        SkipIndex::get(self, key)
    }

    fn snapshot(&self) -> SnapshotHandle {
        let mut h = self.register();
        h.refresh().expect("fresh handle");
        h
    }

    fn refresh(&self, snap: &mut SnapshotHandle) {
        snap.refresh().expect("handle is active");
    }

    fn get_at(&self, snap: &SnapshotHandle, key: &K) -> Option<V> {
        self.get_in(key, snap)
            .expect("registered snapshots are never stale")
    }

    fn scan_at(&self, snap: &SnapshotHandle, from: &K, to: &K) -> Vec<(K, V)> {
        self.scan_in(from, to, snap)
            .expect("registered snapshots are never stale")
    }

    fn scan_n_at(
        &self,
        snap: &SnapshotHandle,
        from: &K,
        n: usize,
        f: &mut dyn FnMut(&K, &V),
    ) -> usize {
        let mut seen = 0;
        if n == 0 {
            return 0;
        }
        let v = snap.version().expect("handle is active");
        self.scan_with(from, Bound::Unbounded, v, |k, val| {
            f(k, val);
            seen += 1;
            seen < n
        });
        seen
    }
}

/// One `BTreeMap` behind a read-write lock.
pub struct LockedBTree<K, V> {
    map: RwLock<Arc<BTreeMap<K, V>>>,
}

impl<K: Ord + Clone, V: Clone> Default for LockedBTree<K, V> {
    fn default() -> Self {
        LockedBTree {
            map: RwLock::new(Arc::new(BTreeMap::new())),
        }
    }
}

impl<K: Ord + Clone, V: Clone> LockedBTree<K, V> {
    pub fn new() -> Self {
        Self::default()
    }

    fn write<R>(&self, f: impl FnOnce(&mut BTreeMap<K, V>) -> R) -> R {
        let mut guard = self.map.write().unwrap_or_else(|e| e.into_inner());
        f(Arc::make_mut(&mut guard))
    }

    fn current(&self) -> Arc<BTreeMap<K, V>> {
        self.map.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn len(&self) -> usize {
        self.current().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<(K, V)> {
        self.current()
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

impl<K: IndexKey, V: IndexValue> OrderedIndex<K, V> for LockedBTree<K, V> {
    type Snapshot = Arc<BTreeMap<K, V>>;

    fn name(&self) -> &'static str {
        "locked-btree"
    }

    fn put(&self, key: K, value: V) {
        self.write(|m| m.insert(key, value));
    }

    fn remove(&self, key: &K) {
        self.write(|m| m.remove(key));
    }

    fn apply(&self, batch: Batch<K, V>) {
        self.write(|m| {
            for (k, op) in batch.ops() {
                match op {
                    Op::Put(v) => {
                        m.insert(k.clone(), v.clone());
                    }
                    Op::Remove => {
                        m.remove(k);
                    }
                }
            }
        });
    }

    fn get(&self, key: &K) -> Option<V> {
        self.map
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(key)
            .cloned()
    }

    fn snapshot(&self) -> Self::Snapshot {
        self.current()
    }

    fn refresh(&self, snap: &mut Self::Snapshot) {
        *snap = self.current();
    }

    fn get_at(&self, snap: &Self::Snapshot, key: &K) -> Option<V> {
        snap.get(key).cloned()
    }

    fn scan_at(&self, snap: &Self::Snapshot, from: &K, to: &K) -> Vec<(K, V)> {
        if from >= to {
            return Vec::new();
        }
        snap.range(from.clone()..to.clone())
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    fn scan_n_at(
        &self,
        snap: &Self::Snapshot,
        from: &K,
        n: usize,
        f: &mut dyn FnMut(&K, &V),
    ) -> usize {
        let mut seen = 0;
        for (k, v) in snap.range(from.clone()..).take(n) {
            f(k, v);
            seen += 1;
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exercise<I: OrderedIndex<u32, u32>>(index: &I) -> Vec<(u32, u32)> {
        for k in 0..100 {
            index.put(k, k);
        }
        let snap = index.snapshot();
        let mut b = Batch::new();
        b.put(5, 50).remove(6).put(200, 1);
        index.apply(b);
        index.remove(&7);
        assert_eq!(index.get_at(&snap, &6), Some(6));
        assert_eq!(index.get(&6), None);
        assert_eq!(index.scan_at(&snap, &5, &8), vec![(5, 5), (6, 6), (7, 7)]);
        let mut seen = Vec::new();
        let mut fresh = index.snapshot();
        index.refresh(&mut fresh);
        assert_eq!(index.scan_n_at(&fresh, &4, 3, &mut |k, _| seen.push(*k)), 3);
        assert_eq!(seen, vec![4, 5, 8]);
        index.scan_at(&fresh, &0, &1000)
    }

    #[test]
    fn implementations_agree() {
        let a = exercise(&LockedBTree::new());
        let b = exercise(&SkipIndex::new());
        assert_eq!(a, b);
        assert_eq!(a.len(), 99);
    }
}
