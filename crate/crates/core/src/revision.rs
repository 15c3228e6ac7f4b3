//! Immutable, version-stamped blocks of sorted entries.
//!
//! A revision holds the complete contents of one node's key range at one
//! version. Updates never modify a published revision: they copy its arrays,
//! apply the change and push the copy as the node's new head.
//!
//! Lookups inside a revision go through a small open hash index. For `n`
//! entries the `indices` array has `2n` 16-bit slots; entry `i` is written to
//! slot `2t` or `2t + 1` with `t = h(key) mod n`, whichever is free first. A
//! probe that hits an empty slot proves the key is absent. When both slots
//! of a pair hold other keys the lookup falls back to binary search.

use std::cmp::Ordering as CmpOrdering;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Arc, Weak};

use crate::autoscale::RevisionStats;
use crate::clock::{final_from, Clock, VersionStamp};
use crate::error::{Error, Result};
use crate::node::Node;
use crate::reclaim::ArcCell;

/// Largest number of entries a revision can index with 16-bit slots.
pub const MAX_ENTRIES: usize = u16::MAX as usize;

const EMPTY_SLOT: u16 = u16::MAX;

/// Hash function used to place keys in the per-revision index.
pub type KeyHasher<K> = fn(&K) -> u16;

struct Fnv64(u64);

impl Hasher for Fnv64 {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
}

/// FNV-1a over the key's `Hash` stream, folded to 16 bits with a
/// multiply-shift.
pub fn default_key_hash<K: Hash>(key: &K) -> u16 {
    let mut h = Fnv64(0xcbf2_9ce4_8422_2325);
    key.hash(&mut h);
    let x = h.finish();
    ((x ^ (x >> 29)).wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 48) as u16
}

/// What a lookup had to do to answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Probe {
    /// Index slots inspected (0, 1 or 2).
    pub slots: u8,
    /// Whether the binary-search fallback ran.
    pub fell_back: bool,
}

/// Sorted key/value arrays plus their hash index.
pub struct Entries<K, V> {
    keys: Box<[K]>,
    values: Box<[V]>,
    hashes: Box<[u16]>,
    indices: Box<[u16]>,
    hasher: KeyHasher<K>,
}

impl<K: Ord + Clone, V: Clone> Entries<K, V> {
    pub fn empty(hasher: KeyHasher<K>) -> Self {
        Entries {
            keys: Box::new([]),
            values: Box::new([]),
            hashes: Box::new([]),
            indices: Box::new([]),
            hasher,
        }
    }

    /// Build from entries sorted by key with no duplicates.
    pub fn build(entries: Vec<(K, V)>, hasher: KeyHasher<K>) -> Result<Self> {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        let (keys, values): (Vec<K>, Vec<V>) = entries.into_iter().unzip();
        let hashes = keys.iter().map(hasher).collect();
        Self::from_parts(keys, values, hashes, hasher)
    }

    fn from_parts(
        keys: Vec<K>,
        values: Vec<V>,
        hashes: Vec<u16>,
        hasher: KeyHasher<K>,
    ) -> Result<Self> {
        let n = keys.len();
        if n > MAX_ENTRIES {
            return Err(Error::CapacityExceeded(n));
        }
        let mut indices = vec![EMPTY_SLOT; 2 * n];
        for (i, h) in hashes.iter().enumerate() {
            let t = usize::from(*h) % n;
            if indices[2 * t] == EMPTY_SLOT {
                indices[2 * t] = i as u16;
            } else if indices[2 * t + 1] == EMPTY_SLOT {
                indices[2 * t + 1] = i as u16;
            }
        }
        Ok(Entries {
            keys: keys.into(),
            values: values.into(),
            hashes: hashes.into(),
            indices: indices.into(),
            hasher,
        })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[K] {
        &self.keys
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn hashes(&self) -> &[u16] {
        &self.hashes
    }

    pub fn indices(&self) -> &[u16] {
        &self.indices
    }

    pub fn hasher(&self) -> KeyHasher<K> {
        self.hasher
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &V)> {
        self.keys.iter().zip(self.values.iter())
    }

    pub fn first_key(&self) -> Option<&K> {
        self.keys.first()
    }

    pub fn last_key(&self) -> Option<&K> {
        self.keys.last()
    }

    pub fn contains(&self, key: &K) -> bool {
        self.position(key).is_some()
    }

    pub fn lookup(&self, key: &K) -> Option<&V> {
        self.position(key).map(|i| &self.values[i])
    }

    /// Same as [`lookup`](Self::lookup), also reporting the probe path.
    pub fn lookup_traced(&self, key: &K) -> (Option<&V>, Probe) {
        let (pos, probe) = self.position_traced(key);
        (pos.map(|i| &self.values[i]), probe)
    }

    /// Reference answer that ignores the hash index.
    pub fn binary_search(&self, key: &K) -> Option<&V> {
        self.keys.binary_search(key).ok().map(|i| &self.values[i])
    }

    #[inline]
    fn position(&self, key: &K) -> Option<usize> {
        self.position_traced(key).0
    }

    fn position_traced(&self, key: &K) -> (Option<usize>, Probe) {
        let n = self.keys.len();
        let mut probe = Probe::default();
        if n == 0 {
            return (None, probe);
        }
        let h = (self.hasher)(key);
        let t = usize::from(h) % n;
        for slot in [2 * t, 2 * t + 1] {
            probe.slots += 1;
            let idx = self.indices[slot];
            if idx == EMPTY_SLOT {
                return (None, probe);
            }
            let idx = usize::from(idx);
            if self.hashes[idx] == h && self.keys[idx] == *key {
                return (Some(idx), probe);
            }
        }
        probe.fell_back = true;
        (self.keys.binary_search(key).ok(), probe)
    }

    /// Copy with `key` set to `value`.
    pub fn with_put(&self, key: K, value: V) -> Result<Self> {
        self.with_ops(std::iter::once((key, Op::Put(value))))
    }

    /// Copy without `key`.
    pub fn with_remove(&self, key: &K) -> Self {
        self.with_ops(std::iter::once((key.clone(), Op::<V>::Remove)))
            .expect("removing never grows a revision")
    }

    /// Copy with a sorted run of operations merged in.
    pub fn with_ops<I>(&self, ops: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, Op<V>)>,
    {
        let mut ops = ops.into_iter().peekable();
        let cap = self.len() + ops.size_hint().0;
        let mut keys = Vec::with_capacity(cap);
        let mut values = Vec::with_capacity(cap);
        let mut hashes = Vec::with_capacity(cap);
        let mut i = 0;
        while i < self.len() || ops.peek().is_some() {
            let order = match (self.keys.get(i), ops.peek()) {
                (Some(k), Some((ok, _))) => k.cmp(ok),
                (Some(_), None) => CmpOrdering::Less,
                (None, _) => CmpOrdering::Greater,
            };
            match order {
                CmpOrdering::Less => {
                    keys.push(self.keys[i].clone());
                    values.push(self.values[i].clone());
                    hashes.push(self.hashes[i]);
                    i += 1;
                }
                CmpOrdering::Equal | CmpOrdering::Greater => {
                    let (k, op) = ops.next().unwrap();
                    if order == CmpOrdering::Equal {
                        i += 1;
                    }
                    if let Op::Put(v) = op {
                        hashes.push((self.hasher)(&k));
                        keys.push(k);
                        values.push(v);
                    }
                }
            }
        }
        Self::from_parts(keys, values, hashes, self.hasher)
    }

    /// Split at the median; the left half keeps `ceil(n / 2)` entries.
    pub fn split(&self) -> (Self, Self) {
        let mid = self.len().div_ceil(2);
        (self.slice(0, mid), self.slice(mid, self.len()))
    }

    /// Entries with keys in `[lo, hi)`; `None` bounds are open.
    pub fn restrict(&self, lo: Option<&K>, hi: Option<&K>) -> Self {
        let (a, b) = self.bounds(lo, hi);
        if a == 0 && b == self.len() {
            return self.slice(0, self.len());
        }
        self.slice(a, b)
    }

    /// Index range of keys in `[lo, hi)`.
    pub fn bounds(&self, lo: Option<&K>, hi: Option<&K>) -> (usize, usize) {
        let a = lo.map_or(0, |lo| self.keys.partition_point(|k| k < lo));
        let b = hi.map_or(self.len(), |hi| self.keys.partition_point(|k| k < hi));
        (a, b.max(a))
    }

    fn slice(&self, a: usize, b: usize) -> Self {
        Self::from_parts(
            self.keys[a..b].to_vec(),
            self.values[a..b].to_vec(),
            self.hashes[a..b].to_vec(),
            self.hasher,
        )
        .expect("a slice is never larger than its source")
    }

    /// Concatenate two blocks whose key ranges do not overlap.
    pub fn concat(left: &Self, right: &Self) -> Result<Self> {
        debug_assert!(match (left.last_key(), right.first_key()) {
            (Some(a), Some(b)) => a < b,
            _ => true,
        });
        let n = left.len() + right.len();
        if n > MAX_ENTRIES {
            return Err(Error::CapacityExceeded(n));
        }
        let mut keys = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        let mut hashes = Vec::with_capacity(n);
        for part in [left, right] {
            keys.extend_from_slice(&part.keys);
            values.extend_from_slice(&part.values);
            hashes.extend_from_slice(&part.hashes);
        }
        Self::from_parts(keys, values, hashes, left.hasher)
    }

    pub fn to_vec(&self) -> Vec<(K, V)> {
        self.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }
}

/// One element of an update: set a value or delete the key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op<V> {
    Put(V),
    Remove,
}

/// Operations of one atomic batch and the version cell they share.
///
/// The version moves `0 -> optimistic -> final` and is read by every
/// revision the batch creates.
pub struct BatchDescriptor<K, V> {
    pub(crate) version: AtomicI64,
    /// Sorted ascending by key, unique keys.
    pub(crate) ops: Box<[(K, Op<V>)]>,
    /// Stats weight of the whole batch, split across its revisions.
    pub(crate) weight: f64,
}

impl<K: Ord, V> BatchDescriptor<K, V> {
    pub(crate) fn new(ops: Vec<(K, Op<V>)>, weight: f64) -> Self {
        debug_assert!(ops.windows(2).all(|w| w[0].0 < w[1].0));
        BatchDescriptor {
            version: AtomicI64::new(0),
            ops: ops.into(),
            weight,
        }
    }

    pub fn version(&self) -> VersionStamp {
        VersionStamp::from_raw(self.version.load(Ordering::Acquire))
    }

    pub fn ops(&self) -> &[(K, Op<V>)] {
        &self.ops
    }

    /// Ops with keys in `[lo, hi)`.
    pub(crate) fn ops_in(&self, lo: Option<&K>, hi: Option<&K>) -> &[(K, Op<V>)] {
        let a = lo.map_or(0, |lo| self.ops.partition_point(|(k, _)| k < lo));
        let b = hi.map_or(self.ops.len(), |hi| {
            self.ops.partition_point(|(k, _)| k < hi)
        });
        &self.ops[a..b.max(a)]
    }

    /// Set the optimistic stamp if no one has yet.
    pub(crate) fn start(&self, opt: VersionStamp) {
        let _ = self
            .version
            .compare_exchange(0, opt.raw(), Ordering::AcqRel, Ordering::Acquire);
    }
}

/// Where a revision's version lives.
pub(crate) enum Stamp<K, V> {
    Own(AtomicI64),
    /// Split pairs and merge terminator/merge revision pairs.
    Shared(Arc<AtomicI64>),
    Batch(Arc<BatchDescriptor<K, V>>),
}

impl<K, V> Stamp<K, V> {
    pub(crate) fn own(v: VersionStamp) -> Self {
        Stamp::Own(AtomicI64::new(v.raw()))
    }

    pub(crate) fn shared(v: VersionStamp) -> Self {
        Stamp::Shared(Arc::new(AtomicI64::new(v.raw())))
    }

    #[inline]
    fn cell(&self) -> &AtomicI64 {
        match self {
            Stamp::Own(c) => c,
            Stamp::Shared(c) => c,
            Stamp::Batch(d) => &d.version,
        }
    }

    /// A second handle on the same cell (own cells are copied by value).
    pub(crate) fn share(&self) -> Self {
        match self {
            Stamp::Own(c) => Stamp::Own(AtomicI64::new(c.load(Ordering::Acquire))),
            Stamp::Shared(c) => Stamp::Shared(c.clone()),
            Stamp::Batch(d) => Stamp::Batch(d.clone()),
        }
    }
}

pub(crate) enum Kind<K, V> {
    Regular,
    LeftSplit {
        right: Arc<Revision<K, V>>,
        split_key: K,
    },
    RightSplit {
        sibling: Weak<Revision<K, V>>,
    },
    Merge {
        right_next: ArcCell<Revision<K, V>>,
        right_key: K,
        merged: Weak<Node<K, V>>,
    },
    /// Its entries already reflect the update that started the merge.
    MergeTerminator {
        merge: ArcCell<Revision<K, V>>,
    },
    Bulk,
}

/// Kind tag without payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevisionKind {
    Regular,
    LeftSplit,
    RightSplit,
    Merge,
    MergeTerminator,
    Bulk,
}

pub(crate) struct Revision<K, V> {
    pub(crate) kind: Kind<K, V>,
    stamp: Stamp<K, V>,
    pub(crate) entries: Entries<K, V>,
    /// Only (left) successor. Cut by collection, otherwise immutable.
    pub(crate) next: ArcCell<Revision<K, V>>,
    pub(crate) stats: RevisionStats,
}

impl<K, V> Revision<K, V> {
    pub(crate) fn new(
        kind: Kind<K, V>,
        stamp: Stamp<K, V>,
        entries: Entries<K, V>,
        next: Option<Arc<Revision<K, V>>>,
        stats: RevisionStats,
    ) -> Self {
        Revision {
            kind,
            stamp,
            entries,
            next: ArcCell::new(next),
            stats,
        }
    }

    #[inline]
    pub(crate) fn version(&self) -> VersionStamp {
        VersionStamp::from_raw(self.stamp.cell().load(Ordering::Acquire))
    }

    pub(crate) fn stamp(&self) -> &Stamp<K, V> {
        &self.stamp
    }

    pub(crate) fn batch(&self) -> Option<&Arc<BatchDescriptor<K, V>>> {
        match &self.stamp {
            Stamp::Batch(d) => Some(d),
            _ => None,
        }
    }

    pub(crate) fn tag(&self) -> RevisionKind {
        match self.kind {
            Kind::Regular => RevisionKind::Regular,
            Kind::LeftSplit { .. } => RevisionKind::LeftSplit,
            Kind::RightSplit { .. } => RevisionKind::RightSplit,
            Kind::Merge { .. } => RevisionKind::Merge,
            Kind::MergeTerminator { .. } => RevisionKind::MergeTerminator,
            Kind::Bulk => RevisionKind::Bulk,
        }
    }

    pub(crate) fn is_merge_terminator(&self) -> bool {
        matches!(self.kind, Kind::MergeTerminator { .. })
    }

    /// Set the final version unless someone already has. Returns the final
    /// version that stuck.
    pub(crate) fn finalize(&self, clock: &Clock) -> VersionStamp {
        finalize_cell(self.stamp.cell(), clock)
    }

    /// Raise a pending stamp so its final version lands strictly above
    /// `floor`. Used before installing a revision of a shared cell on a node
    /// whose head was finalized after the cell got its optimistic stamp.
    pub(crate) fn raise_above(&self, floor: VersionStamp) {
        raise_cell(self.stamp.cell(), floor.raw() + 1);
    }

    /// Successor followed when looking for `key`.
    #[inline]
    pub(crate) fn successor_for<'g>(
        &self,
        key: &K,
        guard: &'g crate::reclaim::Guard,
    ) -> Option<&'g Revision<K, V>>
    where
        K: Ord,
    {
        match &self.kind {
            Kind::Merge {
                right_next,
                right_key,
                ..
            } if key >= right_key => right_next.load(guard),
            _ => self.next.load(guard),
        }
    }
}

pub(crate) fn finalize_cell(cell: &AtomicI64, clock: &Clock) -> VersionStamp {
    loop {
        let v = cell.load(Ordering::Acquire);
        if v > 0 {
            return VersionStamp::from_raw(v);
        }
        debug_assert!(v < 0, "finalizing an unset stamp");
        let fin = final_from(clock.now(), VersionStamp::from_raw(v));
        clock.wait_until(fin);
        match cell.compare_exchange(v, fin.raw(), Ordering::AcqRel, Ordering::Acquire) {
            Ok(_) => return fin,
            Err(cur) if cur > 0 => return VersionStamp::from_raw(cur),
            Err(_) => {}
        }
    }
}

pub(crate) fn raise_cell(cell: &AtomicI64, magnitude: i64) {
    let mut cur = cell.load(Ordering::Acquire);
    while cur < 0 && -cur < magnitude {
        match cell.compare_exchange(cur, -magnitude, Ordering::AcqRel, Ordering::Acquire) {
            Ok(_) => return,
            Err(v) => cur = v,
        }
    }
}

impl<K, V> Drop for Revision<K, V> {
    fn drop(&mut self) {
        // Unwind long chains iteratively.
        let mut stack = Vec::new();
        take_children(self, &mut stack);
        while let Some(rev) = stack.pop() {
            if let Some(mut owned) = Arc::into_inner(rev) {
                take_children(&mut owned, &mut stack);
            }
        }
    }
}

fn take_children<K, V>(rev: &mut Revision<K, V>, out: &mut Vec<Arc<Revision<K, V>>>) {
    out.extend(rev.next.take_owned());
    match &mut rev.kind {
        Kind::Merge { right_next, .. } => out.extend(right_next.take_owned()),
        Kind::MergeTerminator { merge, .. } => out.extend(merge.take_owned()),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeMap;

    fn h(k: &u32) -> u16 {
        default_key_hash(k)
    }

    fn collide(_: &u32) -> u16 {
        7
    }

    fn build(pairs: &[(u32, u32)]) -> Entries<u32, u32> {
        Entries::build(pairs.to_vec(), h).unwrap()
    }

    #[test]
    fn empty_revision() {
        let e = build(&[]);
        assert_eq!(e.lookup(&3), None);
        assert_eq!(e.indices().len(), 0);
    }

    #[test]
    fn small_lookup() {
        let e = build(&[(1, 10), (2, 20)]);
        assert_eq!(e.lookup(&1), Some(&10));
        assert_eq!(e.lookup(&2), Some(&20));
        assert_eq!(e.lookup(&3), None);
        assert_eq!(e.indices().len(), 4);
        assert_eq!(e.hashes().len(), 2);
    }

    #[test]
    fn random_revisions_agree_with_binary_search() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let mut keys: Vec<u32> = (0..1000).map(|_| rng.random()).collect();
        keys.sort_unstable();
        keys.dedup();
        let e = Entries::build(keys.iter().map(|&k| (k, k ^ 1)).collect(), h).unwrap();
        for &k in &keys {
            assert_eq!(e.lookup(&k), e.binary_search(&k));
        }
        for _ in 0..5000 {
            let k = rng.random();
            assert_eq!(e.lookup(&k), e.binary_search(&k));
        }
    }

    #[test]
    fn empty_slot_means_absent_without_fallback() {
        fn identity(k: &u32) -> u16 {
            *k as u16
        }
        // All three keys land in slot pair 0; pairs 1 and 2 stay empty.
        let e = Entries::build(vec![(3, 3), (6, 6), (9, 9)], identity).unwrap();
        assert_eq!(&e.indices()[2..], &[EMPTY_SLOT; 4]);
        for probe in [1u32, 2, 4, 5] {
            let (v, p) = e.lookup_traced(&probe);
            assert_eq!(v, None);
            assert_eq!(
                p,
                Probe {
                    slots: 1,
                    fell_back: false
                }
            );
        }
        let (v, p) = e.lookup_traced(&9);
        assert_eq!(v, Some(&9));
        assert!(p.fell_back);
    }

    #[test]
    fn most_present_keys_hit_on_first_probe() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mut first = 0;
        let mut total = 0;
        for _ in 0..50 {
            let mut keys: Vec<u32> = (0..200).map(|_| rng.random()).collect();
            keys.sort_unstable();
            keys.dedup();
            let e = Entries::build(keys.iter().map(|&k| (k, k)).collect(), h).unwrap();
            for k in &keys {
                let (v, p) = e.lookup_traced(k);
                assert_eq!(v, Some(k));
                total += 1;
                if p.slots == 1 && !p.fell_back {
                    first += 1;
                }
            }
        }
        // With load factor one and two slots per bucket most keys own the
        // first slot of their pair.
        assert!(first * 10 > total * 6, "{first}/{total}");
    }

    #[test]
    fn three_way_collision_uses_fallback() {
        let e = Entries::build(vec![(1, 1), (2, 2), (3, 3)], collide).unwrap();
        let traced: Vec<_> = [1, 2, 3].iter().map(|k| e.lookup_traced(k)).collect();
        assert!(traced.iter().any(|(_, p)| p.fell_back));
        for (k, (v, _)) in [1, 2, 3].iter().zip(&traced) {
            assert_eq!(*v, Some(k));
        }
        assert_eq!(e.lookup(&4), None);
    }

    #[test]
    fn capacity_limit() {
        let ok: Vec<(u32, ())> = (0..MAX_ENTRIES as u32).map(|k| (k, ())).collect();
        let e = Entries::build(ok, h).unwrap();
        assert_eq!(e.lookup(&65_534), Some(&()));
        let too_many: Vec<(u32, ())> = (0..=MAX_ENTRIES as u32).map(|k| (k, ())).collect();
        assert!(matches!(
            Entries::build(too_many, h),
            Err(Error::CapacityExceeded(65_536))
        ));
    }

    #[test]
    fn put_and_remove_copies() {
        let e = Entries::<u32, u32>::empty(h).with_put(1, 1).unwrap();
        assert_eq!(e.to_vec(), vec![(1, 1)]);
        let e2 = e.with_put(1, 2).unwrap();
        assert_eq!(e2.len(), 1);
        assert_eq!(e2.lookup(&1), Some(&2));
        assert_eq!(e.lookup(&1), Some(&1));
        let gone = e2.with_remove(&1);
        assert!(gone.is_empty());
        assert_eq!(gone.lookup(&1), None);
    }

    #[test]
    fn ops_match_a_map_oracle() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..200 {
            let mut oracle = BTreeMap::new();
            for _ in 0..rng.random_range(0..40) {
                oracle.insert(rng.random_range(0..100u32), rng.random::<u32>());
            }
            let e = Entries::build(oracle.clone().into_iter().collect(), h).unwrap();
            let mut ops = BTreeMap::new();
            for _ in 0..rng.random_range(0..20) {
                let k = rng.random_range(0..100u32);
                let op = if rng.random_bool(0.5) {
                    Op::Put(rng.random::<u32>())
                } else {
                    Op::Remove
                };
                ops.insert(k, op);
            }
            for (k, op) in &ops {
                match op {
                    Op::Put(v) => oracle.insert(*k, *v),
                    Op::Remove => oracle.remove(k),
                };
            }
            let got = e.with_ops(ops).unwrap();
            assert_eq!(got.to_vec(), oracle.into_iter().collect::<Vec<_>>());
            for k in 0..100 {
                assert_eq!(got.lookup(&k), got.binary_search(&k));
            }
        }
    }

    #[test]
    fn split_sizes_and_order() {
        for n in 1..12u32 {
            let e = build(&(0..n).map(|k| (k * 2, k)).collect::<Vec<_>>());
            for ins in 0..=2 * n {
                let put = e.with_put(ins, 0).unwrap();
                let (l, r) = put.split();
                assert_eq!(l.len(), put.len().div_ceil(2));
                assert!(l.len().abs_diff(r.len()) <= 1);
                if let (Some(a), Some(b)) = (l.last_key(), r.first_key()) {
                    assert!(a < b);
                }
                let joined = Entries::concat(&l, &r).unwrap();
                assert_eq!(joined.to_vec(), put.to_vec());
            }
        }
    }

    #[test]
    fn restrict_bounds() {
        let e = build(&[(1, 1), (3, 3), (5, 5), (7, 7)]);
        assert_eq!(e.restrict(Some(&3), Some(&7)).keys(), &[3, 5]);
        assert_eq!(e.restrict(None, Some(&4)).keys(), &[1, 3]);
        assert_eq!(e.restrict(Some(&6), None).keys(), &[7]);
        assert!(e.restrict(Some(&8), None).is_empty());
    }

    #[test]
    fn finalize_and_raise() {
        let clock = Clock::new();
        let cell = AtomicI64::new(-5);
        raise_cell(&cell, 3);
        assert_eq!(cell.load(Ordering::SeqCst), -5);
        raise_cell(&cell, 9);
        assert_eq!(cell.load(Ordering::SeqCst), -9);
        let f = finalize_cell(&cell, &clock);
        assert!(f.raw() >= 9);
        raise_cell(&cell, i64::MAX);
        assert_eq!(finalize_cell(&cell, &clock), f);
    }
}
