//! Atomic multi-key updates.
//!
//! All revisions a batch creates share the batch's version cell, so they
//! become visible together when it is finalized. Nodes are updated from the
//! highest key down; any thread that runs into a pending batch revision
//! finishes the remaining nodes itself before finalizing.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::autoscale::{update_weight, Direction, UpdateKind};
use crate::error::{Error, Result};
use crate::hooks::{self, HookPoint};
use crate::reclaim::{clone_ref, pin, ArcCell, Guard};
use crate::revision::{finalize_cell, BatchDescriptor, Kind, Op, Revision, Stamp};
use crate::skiplist::{IndexKey, IndexValue, SkipIndex, MAX_BATCH};

/// A set of puts and removes applied atomically. Later operations on the
/// same key replace earlier ones.
#[derive(Debug, Clone)]
pub struct Batch<K, V> {
    ops: BTreeMap<K, Op<V>>,
}

impl<K: Ord, V> Default for Batch<K, V> {
    fn default() -> Self {
        Batch {
            ops: BTreeMap::new(),
        }
    }
}

impl<K: Ord, V> Batch<K, V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: K, value: V) -> &mut Self {
        self.ops.insert(key, Op::Put(value));
        self
    }

    pub fn remove(&mut self, key: K) -> &mut Self {
        self.ops.insert(key, Op::Remove);
        self
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> impl Iterator<Item = (&K, &Op<V>)> {
        self.ops.iter()
    }
}

impl<K: Ord, V> FromIterator<(K, Op<V>)> for Batch<K, V> {
    fn from_iter<I: IntoIterator<Item = (K, Op<V>)>>(iter: I) -> Self {
        Batch {
            ops: iter.into_iter().collect(),
        }
    }
}

impl<K: IndexKey, V: IndexValue> SkipIndex<K, V> {
    /// Apply every operation of `batch` atomically.
    pub fn batch(&self, batch: Batch<K, V>) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if batch.len() > MAX_BATCH {
            return Err(Error::CapacityExceeded(batch.len()));
        }
        let desc = Arc::new(BatchDescriptor::new(
            batch.ops.into_iter().collect(),
            update_weight(),
        ));
        let g = pin();
        let mut installed = Vec::new();
        self.run_batch(&desc, Some(&mut installed), &g);
        hooks::fire(HookPoint::BeforeFinalize);
        finalize_cell(&desc.version, &self.clock);
        for rev in &installed {
            self.collect_after(rev, &g);
        }
        Ok(())
    }

    /// Install the batch's revision on every node not yet covered, highest
    /// key first. Returns early once the batch is final.
    pub(crate) fn run_batch(
        &self,
        desc: &Arc<BatchDescriptor<K, V>>,
        mut installed: Option<&mut Vec<Arc<Revision<K, V>>>>,
        g: &Guard,
    ) {
        let ops = desc.ops();
        let total = ops.len() as f64;
        // `ops[..remaining]` still need a revision.
        let mut remaining = ops.len();
        while remaining > 0 {
            if desc.version().is_final() {
                return;
            }
            let key = &ops[remaining - 1].0;
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
            if head.batch().is_some_and(|d| Arc::ptr_eq(d, desc)) {
                match &head.kind {
                    Kind::LeftSplit { .. } => self.help_split(node, head, g),
                    Kind::MergeTerminator { .. } => {
                        // The keys moved to the predecessor's merge revision,
                        // which also covers the predecessor's range.
                        self.help_merge(node, head, g);
                        continue;
                    }
                    Kind::Merge { .. } => self.complete_merge(head, g),
                    _ => {}
                }
                remaining = below(ops, node.key.as_ref(), remaining);
                continue;
            }
            if head.is_merge_terminator() {
                self.help_merge(node, head, g);
                continue;
            }
            if head.version().is_pending() {
                self.help_pending(node, head, g);
                continue;
            }
            if node.next.load_ptr() != next.map_or(std::ptr::null(), |n| n as *const _) {
                continue;
            }
            // Read after the head: if the batch finished meanwhile, this head
            // may be newer than the batch and must not be overwritten.
            if desc.version().is_final() {
                return;
            }
            let lo = below(ops, node.key.as_ref(), remaining);
            let node_ops = &ops[lo..remaining];
            desc.start(self.clock.optimistic());
            if let Some(rev) = self.apply_batch_node(desc, node, head, node_ops, total, g) {
                hooks::fire(HookPoint::BatchNodeApplied);
                if let Some(list) = installed.as_deref_mut() {
                    list.push(rev);
                }
                remaining = lo;
            }
        }
    }

    /// One CAS attempt for a batch on `node`. Structure changes started here
    /// are completed before returning.
    fn apply_batch_node(
        &self,
        desc: &Arc<BatchDescriptor<K, V>>,
        node: &crate::node::Node<K, V>,
        head: &Revision<K, V>,
        node_ops: &[(K, Op<V>)],
        total: f64,
        g: &Guard,
    ) -> Option<Arc<Revision<K, V>>> {
        let entries = head
            .entries
            .with_ops(node_ops.iter().map(|(k, op)| (k.clone(), op.clone())))
            .expect("batch size is bounded");
        let w = desc.weight * node_ops.len() as f64 / total;
        let stats = || head.stats.after_update(w);
        let stamp = || Stamp::Batch(desc.clone());
        let decision = self.config.autoscale.decide(
            &head.stats,
            head.entries.len(),
            entries.len(),
            node.is_base(),
            Direction::Either,
        );
        let raise = |rev: &Revision<K, V>| rev.raise_above(head.version());
        let prev = Some(unsafe { clone_ref(head) });
        match decision {
            UpdateKind::Split => {
                let lrev = self.split_pair(entries, stamp(), head, stats);
                raise(&lrev);
                if node
                    .head
                    .compare_exchange(head, Some(lrev.clone()), g)
                    .is_ok()
                {
                    hooks::fire(HookPoint::SplitInstalled);
                    self.help_split(node, &lrev, g);
                    return Some(lrev);
                }
            }
            UpdateKind::Merge => {
                let mt = Arc::new(Revision::new(
                    Kind::MergeTerminator {
                        merge: ArcCell::null(),
                    },
                    stamp(),
                    entries,
                    prev,
                    stats(),
                ));
                raise(&mt);
                if node
                    .head
                    .compare_exchange(head, Some(mt.clone()), g)
                    .is_ok()
                {
                    hooks::fire(HookPoint::TerminatorInstalled);
                    return Some(self.help_merge(node, &mt, g));
                }
            }
            UpdateKind::Regular => {
                let rev = Arc::new(Revision::new(
                    Kind::Regular,
                    stamp(),
                    entries,
                    prev,
                    stats(),
                ));
                raise(&rev);
                if node
                    .head
                    .compare_exchange(head, Some(rev.clone()), g)
                    .is_ok()
                {
                    return Some(rev);
                }
            }
        }
        None
    }
}

/// Index of the first op at or above `lo`, capped at `remaining`.
fn below<K: Ord, V>(ops: &[(K, Op<V>)], lo: Option<&K>, remaining: usize) -> usize {
    match lo {
        None => 0,
        Some(lo) => ops[..remaining].partition_point(|(k, _)| k < lo),
    }
}
