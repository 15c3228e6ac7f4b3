//! Node list, index towers and the split/merge protocols.
//!
//! Level 0 is a linked list of nodes, each owning a key range and a list of
//! immutable revisions. Higher levels only accelerate search. Structure
//! modifications are split into single-CAS steps and every intermediate
//! state carries enough information for any thread to finish the job:
//!
//! * split: install a left split revision on `k`, link a temporary node
//!   after `k`, swap it for the real right node, finalize.
//! * merge: install a merge terminator on `o`, install a merge revision on
//!   the predecessor `p`, unlink `o`, mark it terminated, finalize.

use std::hash::Hash;
use std::ptr;
use std::sync::atomic::{AtomicI64, AtomicU64, Ordering};
use std::sync::Arc;

use crate::autoscale::{AutoscaleConfig, RevisionStats};
use crate::clock::{Clock, VersionStamp};
use crate::hooks::{self, HookPoint};
use crate::node::{upper_of, Node};
use crate::reclaim::{clone_ref, pin, ArcCell, Guard};
use crate::revision::{
    default_key_hash, finalize_cell, Entries, KeyHasher, Kind, Revision, RevisionKind, Stamp,
    MAX_ENTRIES,
};
use crate::snapshot::Registry;

/// Largest number of operations in one batch. Together with the cap on the
/// split threshold this keeps every revision under [`MAX_ENTRIES`].
pub const MAX_BATCH: usize = MAX_ENTRIES / 2;

/// Keys the index can store.
pub trait IndexKey: Ord + Clone + Send + Sync + 'static {}
/// A node's level-0 predecessor and the element before it.
type PredPair<'g, K, V> = (Option<&'g Node<K, V>>, &'g Node<K, V>);

impl<T: Ord + Clone + Send + Sync + 'static> IndexKey for T {}

/// Values the index can store.
pub trait IndexValue: Clone + Send + Sync + 'static {}
impl<T: Clone + Send + Sync + 'static> IndexValue for T {}

/// Index tower shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowerConfig {
    /// Chance that a node reaching level `i` also reaches `i + 1`.
    pub promotion: f64,
    /// Total levels including level 0.
    pub max_levels: usize,
    /// Force every new node to this many levels (1 = level 0 only).
    pub fixed_height: Option<usize>,
}

impl Default for TowerConfig {
    fn default() -> Self {
        TowerConfig {
            promotion: 0.25,
            max_levels: 32,
            fixed_height: None,
        }
    }
}

/// Construction parameters.
#[derive(Debug, Clone)]
pub struct Config<K> {
    pub autoscale: AutoscaleConfig,
    pub tower: TowerConfig,
    /// Updates between two recomputations of the collection horizon.
    pub gc_interval: u64,
    pub hasher: KeyHasher<K>,
}

impl<K: Hash> Default for Config<K> {
    fn default() -> Self {
        Config::with_hasher(default_key_hash::<K>)
    }
}

impl<K> Config<K> {
    pub fn with_hasher(hasher: KeyHasher<K>) -> Self {
        Config {
            autoscale: AutoscaleConfig::default(),
            tower: TowerConfig::default(),
            gc_interval: 128,
            hasher,
        }
    }

    pub fn autoscale(mut self, autoscale: AutoscaleConfig) -> Self {
        self.autoscale = autoscale;
        self
    }

    pub fn tower(mut self, tower: TowerConfig) -> Self {
        self.tower = tower;
        self
    }

    pub fn gc_interval(mut self, n: u64) -> Self {
        self.gc_interval = n;
        self
    }

    /// Checks the limits that keep revisions below [`MAX_ENTRIES`].
    pub fn validate(&self) -> Result<(), String> {
        let a = &self.autoscale;
        if a.min_size == 0 || a.min_size > a.max_size {
            return Err(format!(
                "revision size bounds must satisfy 0 < min ({}) <= max ({})",
                a.min_size, a.max_size
            ));
        }
        // Written negated so NaN is rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(a.split_factor > 1.0) || !(a.merge_factor > 0.0 && a.merge_factor < 1.0) {
            return Err("split factor must exceed 1, merge factor must be in (0, 1)".into());
        }
        if a.split_threshold(a.max_size) > MAX_ENTRIES / 4 {
            return Err(format!(
                "split threshold {} exceeds {}",
                a.split_threshold(a.max_size),
                MAX_ENTRIES / 4
            ));
        }
        let t = &self.tower;
        if !(t.promotion > 0.0 && t.promotion < 1.0) || t.max_levels == 0 || t.max_levels > 64 {
            return Err("tower promotion must be in (0, 1) and levels in 1..=64".into());
        }
        if let Some(h) = t.fixed_height {
            if h == 0 || h > t.max_levels {
                return Err("fixed tower height must be in 1..=max_levels".into());
            }
        }
        Ok(())
    }
}

/// A lock-free ordered map with snapshot reads and atomic batches.
pub struct SkipIndex<K, V> {
    pub(crate) base: Arc<Node<K, V>>,
    pub(crate) clock: Clock,
    pub(crate) registry: Arc<Registry>,
    pub(crate) config: Config<K>,
    pub(crate) horizon: AtomicI64,
    updates: AtomicU64,
}

/// A node located for `key` together with the successor and head read
/// while validating it.
pub(crate) struct Located<'g, K, V> {
    pub(crate) node: &'g Node<K, V>,
    pub(crate) next: Option<&'g Node<K, V>>,
    pub(crate) head: &'g Revision<K, V>,
}

#[inline]
fn same<T>(a: Option<&T>, b: *const T) -> bool {
    a.map_or(ptr::null(), |r| r as *const T) == b
}

impl<K: IndexKey + Hash, V: IndexValue> SkipIndex<K, V> {
    pub fn new() -> Self {
        Self::with_config(Config::default())
    }
}

impl<K: IndexKey + Hash, V: IndexValue> Default for SkipIndex<K, V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: IndexKey, V: IndexValue> SkipIndex<K, V> {
    /// Panics if `config` fails [`Config::validate`].
    pub fn with_config(config: Config<K>) -> Self {
        if let Err(e) = config.validate() {
            panic!("invalid index configuration: {e}");
        }
        let clock = Clock::new();
        let initial = Revision::new(
            Kind::Regular,
            Stamp::own(clock.now()),
            Entries::empty(config.hasher),
            None,
            RevisionStats::default(),
        );
        let base = Arc::new(Node::base(Arc::new(initial), config.tower.max_levels - 1));
        SkipIndex {
            base,
            clock,
            registry: Arc::new(Registry::new(clock)),
            config,
            horizon: AtomicI64::new(1),
            updates: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> &Config<K> {
        &self.config
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    fn random_height(&self) -> usize {
        let t = &self.config.tower;
        if let Some(h) = t.fixed_height {
            return h;
        }
        let mut h = 1;
        while h < t.max_levels && rand::random::<f64>() < t.promotion {
            h += 1;
        }
        h
    }

    // ----- search -------------------------------------------------------

    /// Walk the index levels down to level 1 and return the last node
    /// passed. With `strict` it only passes nodes whose key is `< key`,
    /// otherwise `<= key`. Terminated nodes met on the way are unlinked.
    pub(crate) fn descend<'g>(
        &'g self,
        key: &K,
        strict: bool,
        stop: usize,
        g: &'g Guard,
    ) -> &'g Node<K, V> {
        let mut pred: &'g Node<K, V> = &self.base;
        for level in (stop..self.base.tower.len()).rev() {
            loop {
                let slot = &pred.tower[level];
                let Some(n) = slot.load(g) else { break };
                if n.is_terminated() {
                    let succ = n.tower[level].load_arc(g);
                    let _ = slot.compare_exchange(n, succ, g);
                    continue;
                }
                let pass = if strict {
                    n.starts_before(key)
                } else {
                    n.starts_at_or_before(key)
                };
                if pass {
                    pred = n;
                } else {
                    break;
                }
            }
        }
        pred
    }

    /// Element whose range contains `key` (possibly a temporary split node)
    /// and the level-0 element it was reached from.
    pub(crate) fn find_node<'g>(
        &'g self,
        key: &K,
        g: &'g Guard,
    ) -> (Option<&'g Node<K, V>>, &'g Node<K, V>) {
        let mut cur = self.descend(key, false, 0, g);
        let mut pred = None;
        loop {
            match cur.next.load(g) {
                Some(n) if n.starts_at_or_before(key) => {
                    pred = Some(cur);
                    cur = n;
                }
                _ => return (pred, cur),
            }
        }
    }

    /// Find a live node for `key`, helping whatever blocks it: temporary
    /// nodes, merge terminators and, with `help_pending`, any pending head.
    pub(crate) fn locate<'g>(
        &'g self,
        key: &K,
        help_pending: bool,
        g: &'g Guard,
    ) -> Located<'g, K, V> {
        loop {
            let (pred, node) = self.find_node(key, g);
            if node.is_temp() {
                self.help_temp(pred.expect("temporary nodes are never first"), node, g);
                continue;
            }
            let next = node.next.load(g);
            if next.is_some_and(|n| n.starts_at_or_before(key)) {
                continue;
            }
            let head = node.head(g);
            if head.is_merge_terminator() {
                self.help_merge(node, head, g);
                continue;
            }
            if help_pending && head.version().is_pending() {
                self.help_pending(node, head, g);
                continue;
            }
            if !same(next, node.next.load_ptr()) {
                continue;
            }
            return Located { node, next, head };
        }
    }

    /// Like [`Self::locate`] for the base node, which covers the lowest keys.
    pub(crate) fn locate_base<'g>(&'g self, g: &'g Guard) -> Located<'g, K, V> {
        let node: &'g Node<K, V> = &self.base;
        loop {
            let next = node.next.load(g);
            if let Some(t) = next.filter(|n| n.is_temp()) {
                self.help_temp(node, t, g);
                continue;
            }
            let head = node.head(g);
            if !same(next, node.next.load_ptr()) {
                continue;
            }
            return Located { node, next, head };
        }
    }

    /// The level-0 element whose `next` is `o`, and the element before that.
    /// `None` when `o` is not reachable.
    fn find_pred<'g>(&'g self, o: &Node<K, V>, g: &'g Guard) -> Option<PredPair<'g, K, V>> {
        let key = o.key.as_ref()?;
        'retry: loop {
            let mut prev = None;
            let mut cur = self.descend(key, true, 0, g);
            loop {
                if cur.is_terminated() {
                    continue 'retry;
                }
                let next = cur.next.load(g)?;
                if ptr::eq(next, o) {
                    return Some((prev, cur));
                }
                if !next.starts_at_or_before(key) {
                    return None;
                }
                prev = Some(cur);
                cur = next;
            }
        }
    }

    // ----- towers -------------------------------------------------------

    fn link_tower(&self, o: &Arc<Node<K, V>>, g: &Guard) {
        let key = o.key.as_ref().expect("only keyed nodes get towers");
        for level in 0..o.tower.len() {
            loop {
                if o.is_terminated() {
                    return;
                }
                let pred = self.descend(key, true, level, g);
                let slot = &pred.tower[level];
                let succ = slot.load(g);
                if succ.is_some_and(|s| ptr::eq(s, &**o)) {
                    break;
                }
                o.tower[level].store(succ.map(|s| unsafe { clone_ref(s) }), g);
                let succ_ptr = succ.map_or(ptr::null(), |s| s as *const _);
                if slot.compare_exchange(succ_ptr, Some(o.clone()), g).is_ok() {
                    break;
                }
            }
        }
    }

    // ----- helping ------------------------------------------------------

    /// Drive a pending revision's update to completion and return its final
    /// version.
    pub(crate) fn help_pending(
        &self,
        node: &Node<K, V>,
        rev: &Revision<K, V>,
        g: &Guard,
    ) -> VersionStamp {
        match &rev.kind {
            Kind::LeftSplit { .. } => self.help_split(node, rev, g),
            Kind::MergeTerminator { .. } => {
                self.help_merge(node, rev, g);
            }
            Kind::Merge { .. } => self.complete_merge(rev, g),
            _ => {}
        }
        self.finish(rev, g)
    }

    /// Finalize the update that owns `rev`. For batches this first applies
    /// every remaining node.
    pub(crate) fn finish(&self, rev: &Revision<K, V>, g: &Guard) -> VersionStamp {
        match rev.batch() {
            Some(desc) => {
                if desc.version().is_pending() {
                    self.run_batch(desc, None, g);
                }
                finalize_cell(&desc.version, &self.clock)
            }
            None => rev.finalize(&self.clock),
        }
    }

    /// Complete or discard the split behind a temporary node reached from
    /// `pred`.
    pub(crate) fn help_temp(&self, pred: &Node<K, V>, t: &Node<K, V>, g: &Guard) {
        let temp = t.temp.as_ref().expect("not a temporary node");
        if temp.left.version().is_final() {
            let succ = t.next.load_arc(g);
            let _ = pred.next.compare_exchange(t, succ, g);
        } else if let Some(owner) = temp.owner.upgrade() {
            self.help_split(&owner, &temp.left, g);
        }
    }

    /// Finish the split started by `lrev` on `k`. Idempotent; if the split
    /// is already final, only removes a stale temporary node it left behind.
    pub(crate) fn help_split(&self, k: &Node<K, V>, lrev: &Revision<K, V>, g: &Guard) {
        let Kind::LeftSplit { right, split_key } = &lrev.kind else {
            return;
        };
        loop {
            let next = k.next.load(g);
            let own_temp = next.filter(|n| {
                n.temp
                    .as_ref()
                    .is_some_and(|t| ptr::eq(Arc::as_ptr(&t.left), lrev))
            });
            if lrev.version().is_final() {
                if let Some(t) = own_temp {
                    let succ = t.next.load_arc(g);
                    let _ = k.next.compare_exchange(t, succ, g);
                    continue;
                }
                return;
            }
            match next {
                Some(t) if own_temp.is_some() => {
                    hooks::fire(HookPoint::BeforeNodeLink);
                    let o = Arc::new(Node::regular(
                        split_key.clone(),
                        right.clone(),
                        t.next.load_arc(g),
                        self.random_height() - 1,
                    ));
                    if k.next.compare_exchange(t, Some(o.clone()), g).is_ok() {
                        self.link_tower(&o, g);
                        return;
                    }
                }
                Some(n) if n.is_temp() => self.help_temp(k, n, g),
                Some(n) if n.head.load_ptr() == Arc::as_ptr(right) => return,
                _ => {
                    let temp = Arc::new(Node::temporary(
                        split_key.clone(),
                        next.map(|n| unsafe { clone_ref(n) }),
                        unsafe { clone_ref(lrev) },
                        Arc::downgrade(&unsafe { clone_ref(k) }),
                    ));
                    if lrev.version().is_final() {
                        continue;
                    }
                    hooks::fire(HookPoint::BeforeTempInsert);
                    let cur = next.map_or(ptr::null(), |n| n as *const _);
                    if k.next.compare_exchange(cur, Some(temp), g).is_ok() {
                        hooks::fire(HookPoint::TempInserted);
                    }
                }
            }
        }
    }

    /// Finish the merge of `o` started by the terminator `mt`. Returns the
    /// merge revision, which is the same object for every caller.
    pub(crate) fn help_merge(
        &self,
        o: &Node<K, V>,
        mt: &Revision<K, V>,
        g: &Guard,
    ) -> Arc<Revision<K, V>> {
        let Kind::MergeTerminator { merge, .. } = &mt.kind else {
            panic!("help_merge needs a merge terminator");
        };
        let okey = o.key.as_ref().expect("the base node never merges");
        loop {
            if let Some(mr) = merge.load(g) {
                self.complete_merge(mr, g);
                return unsafe { clone_ref(mr) };
            }
            let Some((before, p)) = self.find_pred(o, g) else {
                continue;
            };
            if p.is_temp() {
                self.help_temp(before.expect("temporary nodes are never first"), p, g);
                continue;
            }
            let ph = p.head(g);
            if ph.is_merge_terminator() {
                self.help_merge(p, ph, g);
                continue;
            }
            if let Kind::Merge { merged, .. } = &ph.kind {
                // Another helper installed this merge but has not recorded it
                // in the terminator yet.
                if ptr::eq(merged.as_ptr(), o) {
                    self.complete_merge(ph, g);
                    continue;
                }
            }
            if ph.version().is_pending() {
                debug_assert!(
                    !matches!((ph.batch(), mt.batch()), (Some(a), Some(b)) if Arc::ptr_eq(a, b)),
                    "a batch reached a lower node before merging a higher one"
                );
                self.help_pending(p, ph, g);
                continue;
            }
            if !std::ptr::eq(p.next.load_ptr(), o) || !merge.is_null() {
                continue;
            }

            let left;
            let left = match mt.batch() {
                Some(desc) => {
                    let ops = desc.ops_in(p.key.as_ref(), Some(okey));
                    left = ph
                        .entries
                        .with_ops(ops.iter().map(|(k, op)| (k.clone(), op.clone())))
                        .expect("batch size is bounded");
                    &left
                }
                None => &ph.entries,
            };
            let entries = Entries::concat(left, &mt.entries).expect("merged sizes are bounded");
            mt.raise_above(ph.version());
            let o_arc = unsafe { clone_ref(o) };
            let mr = Arc::new(Revision::new(
                Kind::Merge {
                    right_next: ArcCell::new(mt.next.load_arc(g)),
                    right_key: okey.clone(),
                    merged: Arc::downgrade(&o_arc),
                },
                mt.stamp().share(),
                entries,
                Some(unsafe { clone_ref(ph) }),
                ph.stats.combined(&mt.stats),
            ));
            drop(o_arc);
            hooks::fire(HookPoint::BeforeMergeInstall);
            if p.head.compare_exchange(ph, Some(mr.clone()), g).is_ok() {
                hooks::fire(HookPoint::MergeInstalled);
                self.complete_merge(&mr, g);
                return mr;
            }
        }
    }

    /// Steps after a merge revision is installed: record it in the
    /// terminator, unlink the merged node, mark it terminated.
    pub(crate) fn complete_merge(&self, mr: &Revision<K, V>, g: &Guard) {
        let Kind::Merge { merged, .. } = &mr.kind else {
            return;
        };
        let Some(o) = merged.upgrade() else {
            return;
        };
        if o.is_terminated() {
            return;
        }
        if let Some(mt) = o.head.load(g) {
            if let Kind::MergeTerminator { merge, .. } = &mt.kind {
                if merge.is_null() {
                    let _ = merge.compare_exchange(ptr::null(), Some(unsafe { clone_ref(mr) }), g);
                }
            }
        }
        while let Some((before, p)) = self.find_pred(&o, g) {
            if p.is_temp() {
                self.help_temp(before.expect("temporary nodes are never first"), p, g);
                continue;
            }
            let ph = p.head(g);
            if !ptr::eq(ph, mr) && ph.is_merge_terminator() {
                // A stale predecessor that is itself being merged away.
                self.help_merge(p, ph, g);
                continue;
            }
            let succ = o.next.load_arc(g);
            let _ = p.next.compare_exchange(Arc::as_ptr(&o), succ, g);
        }
        o.terminated.store(true, Ordering::Release);
        if let Some(key) = o.key.as_ref() {
            // Passing the node's position unlinks its tower.
            let _ = self.descend(key, false, 0, g);
        }
    }

    // ----- updates ------------------------------------------------------

    /// Build a split pair from two halves of a node's new contents.
    pub(crate) fn split_pair(
        &self,
        entries: Entries<K, V>,
        stamp: Stamp<K, V>,
        head: &Revision<K, V>,
        stats: impl Fn() -> RevisionStats,
    ) -> Arc<Revision<K, V>> {
        let (l, r) = entries.split();
        let split_key = r.first_key().expect("split halves are non-empty").clone();
        let rstamp = stamp.share();
        Arc::new_cyclic(|weak_left| {
            let right = Arc::new(Revision::new(
                Kind::RightSplit {
                    sibling: weak_left.clone(),
                },
                rstamp,
                r,
                Some(unsafe { clone_ref(head) }),
                stats().scaled(0.5),
            ));
            Revision::new(
                Kind::LeftSplit { right, split_key },
                stamp,
                l,
                Some(unsafe { clone_ref(head) }),
                stats().scaled(0.5),
            )
        })
    }

    /// Current collection horizon, recomputed every `gc_interval` calls.
    pub(crate) fn gc_horizon(&self) -> VersionStamp {
        let n = self.updates.fetch_add(1, Ordering::Relaxed);
        if n.is_multiple_of(self.config.gc_interval.max(1)) {
            self.refresh_horizon();
        }
        VersionStamp::from_raw(self.horizon.load(Ordering::Acquire))
    }

    /// Recompute the cached horizon now.
    pub fn refresh_horizon(&self) -> VersionStamp {
        let h = self.registry.horizon();
        let prev = self.horizon.fetch_max(h.raw(), Ordering::AcqRel);
        VersionStamp::from_raw(prev.max(h.raw()))
    }

    /// The cached horizon snapshot reads are checked against.
    pub fn horizon(&self) -> VersionStamp {
        VersionStamp::from_raw(self.horizon.load(Ordering::Acquire))
    }

    /// Cut `rev`'s list after the first revision no reader can skip.
    pub(crate) fn collect_garbage(&self, rev: &Revision<K, V>, g: &Guard) {
        let h = self.gc_horizon();
        self.truncate(rev, h, g);
    }

    fn truncate(&self, rev: &Revision<K, V>, horizon: VersionStamp, g: &Guard) {
        let mut r = rev;
        loop {
            let v = r.version();
            if v.is_final() && v <= horizon {
                r.next.store(None, g);
                if let Kind::Merge { right_next, .. } = &r.kind {
                    right_next.store(None, g);
                }
                return;
            }
            if let Kind::Merge { right_next, .. } = &r.kind {
                if let Some(rn) = right_next.load(g) {
                    self.truncate(rn, horizon, g);
                }
            }
            match r.next.load(g) {
                Some(n) => r = n,
                None => return,
            }
        }
    }

    // ----- inspection ---------------------------------------------------

    /// A consistent description of the structure. Only meaningful while no
    /// update is running.
    pub fn audit(&self) -> Audit<K> {
        let g = pin();
        let mut audit = Audit::default();
        let mut prev_key: Option<&K> = None;
        let mut cur: &Node<K, V> = &self.base;
        loop {
            let next = cur.next.load(&g);
            if cur.is_temp() {
                audit.temp_nodes += 1;
            } else {
                let head = cur.head(&g);
                let upper = upper_of(next);
                let mut info = NodeInfo {
                    key: cur.key.clone(),
                    head_kind: head.tag(),
                    head_version: head.version(),
                    entries: head.entries.len(),
                    list_len: 0,
                    revisions: Vec::new(),
                    right_key: match &head.kind {
                        Kind::Merge { right_key, .. } => Some(right_key.clone()),
                        _ => None,
                    },
                    tower_height: cur.tower.len() + 1,
                };
                if let (Some(p), Some(k)) = (prev_key, cur.key.as_ref()) {
                    if p >= k {
                        audit.problems.push("node keys are not increasing".into());
                    }
                }
                if cur.is_terminated() {
                    audit.problems.push("terminated node on level 0".into());
                }
                if head.is_merge_terminator() {
                    audit
                        .problems
                        .push("merge terminator left as a head".into());
                }
                if head.version().is_pending() {
                    audit.pending_heads += 1;
                }
                if let Kind::RightSplit { sibling } = &head.kind {
                    if sibling
                        .upgrade()
                        .is_some_and(|l| l.version() != head.version())
                    {
                        audit.problems.push("split pair versions differ".into());
                    }
                }
                let keys = head.entries.keys();
                if keys.windows(2).any(|w| w[0] >= w[1]) {
                    audit.problems.push("revision keys are not sorted".into());
                }
                if let (Some(first), Some(k)) = (keys.first(), cur.key.as_ref()) {
                    if first < k {
                        audit.problems.push("entry below the node key".into());
                    }
                }
                if let (Some(last), Some(u)) = (keys.last(), upper) {
                    if last >= u {
                        audit
                            .problems
                            .push("entry at or above the next node key".into());
                    }
                }
                let mut r = Some(head);
                let mut prev_v: Option<VersionStamp> = None;
                let mut pending_below_head = false;
                while let Some(rev) = r {
                    info.list_len += 1;
                    let v = rev.version();
                    info.revisions.push((rev.tag(), v));
                    if info.list_len > 1 && v.is_pending() {
                        pending_below_head = true;
                    }
                    if let Some(pv) = prev_v {
                        if v.magnitude() >= pv.magnitude() {
                            audit
                                .problems
                                .push("versions do not decrease along a revision list".into());
                        }
                    }
                    prev_v = Some(v);
                    r = rev.next.load(&g);
                }
                if pending_below_head {
                    audit
                        .problems
                        .push("pending revision below the head".into());
                }
                audit.entries += head.entries.len();
                prev_key = cur.key.as_ref();
                audit.nodes.push(info);
            }
            match next {
                Some(n) => cur = n,
                None => break,
            }
        }
        // Index levels must be sorted; count stale (terminated) entries.
        for level in 0..self.base.tower.len() {
            let mut prev: Option<&K> = None;
            let mut n = self.base.tower[level].load(&g);
            while let Some(node) = n {
                if node.is_terminated() {
                    audit.stale_index_entries += 1;
                }
                if let (Some(p), Some(k)) = (prev, node.key.as_ref()) {
                    if p > k {
                        audit
                            .problems
                            .push(format!("index level {} is not sorted", level + 1));
                    }
                }
                prev = node.key.as_ref();
                n = node.tower[level].load(&g);
                if level == 0 {
                    audit.level1_nodes += 1;
                }
            }
        }
        audit
    }
}

/// One level-0 node as seen by [`SkipIndex::audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct NodeInfo<K> {
    pub key: Option<K>,
    pub head_kind: RevisionKind,
    pub head_version: VersionStamp,
    pub entries: usize,
    pub list_len: usize,
    /// Kind and version of every revision along the left-successor chain,
    /// newest first.
    pub revisions: Vec<(RevisionKind, VersionStamp)>,
    /// Key of the node absorbed by a merge revision at the head.
    pub right_key: Option<K>,
    pub tower_height: usize,
}

/// Structure report. `problems` is empty for a well-formed index.
#[derive(Debug, Clone)]
pub struct Audit<K> {
    pub nodes: Vec<NodeInfo<K>>,
    pub entries: usize,
    pub pending_heads: usize,
    pub temp_nodes: usize,
    pub stale_index_entries: usize,
    pub level1_nodes: usize,
    pub problems: Vec<String>,
}

impl<K> Default for Audit<K> {
    fn default() -> Self {
        Audit {
            nodes: Vec::new(),
            entries: 0,
            pending_heads: 0,
            temp_nodes: 0,
            stale_index_entries: 0,
            level1_nodes: 0,
            problems: Vec::new(),
        }
    }
}

impl<K> Audit<K> {
    pub fn is_ok(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn max_list_len(&self) -> usize {
        self.nodes.iter().map(|n| n.list_len).max().unwrap_or(0)
    }
}
