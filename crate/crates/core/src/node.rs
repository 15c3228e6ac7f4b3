//! Level-0 skip-list elements.
//!
//! A regular node owns the key range `[key, next.key)` and a revision list.
//! A temporary split node sits between a splitting node and its old successor
//! while the split is in flight; it has no revisions and points back at the
//! left split revision so any thread can finish the split.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Weak};

use crate::reclaim::{ArcCell, Guard};
use crate::revision::Revision;

pub(crate) struct Node<K, V> {
    /// `None` only for the base node, which covers everything below the
    /// first node key.
    pub(crate) key: Option<K>,
    pub(crate) head: ArcCell<Revision<K, V>>,
    pub(crate) next: ArcCell<Node<K, V>>,
    pub(crate) terminated: AtomicBool,
    /// Forward links for index levels `1..=tower.len()`.
    pub(crate) tower: Box<[ArcCell<Node<K, V>>]>,
    pub(crate) temp: Option<TempSplit<K, V>>,
}

pub(crate) struct TempSplit<K, V> {
    pub(crate) left: Arc<Revision<K, V>>,
    pub(crate) owner: Weak<Node<K, V>>,
}

impl<K: Ord, V> Node<K, V> {
    pub(crate) fn base(head: Arc<Revision<K, V>>, height: usize) -> Self {
        Node {
            key: None,
            head: ArcCell::new(Some(head)),
            next: ArcCell::null(),
            terminated: AtomicBool::new(false),
            tower: (0..height).map(|_| ArcCell::null()).collect(),
            temp: None,
        }
    }

    pub(crate) fn regular(
        key: K,
        head: Arc<Revision<K, V>>,
        next: Option<Arc<Node<K, V>>>,
        height: usize,
    ) -> Self {
        Node {
            key: Some(key),
            head: ArcCell::new(Some(head)),
            next: ArcCell::new(next),
            terminated: AtomicBool::new(false),
            tower: (0..height).map(|_| ArcCell::null()).collect(),
            temp: None,
        }
    }

    pub(crate) fn temporary(
        split_key: K,
        next: Option<Arc<Node<K, V>>>,
        left: Arc<Revision<K, V>>,
        owner: Weak<Node<K, V>>,
    ) -> Self {
        Node {
            key: Some(split_key),
            head: ArcCell::null(),
            next: ArcCell::new(next),
            terminated: AtomicBool::new(false),
            tower: Box::new([]),
            temp: Some(TempSplit { left, owner }),
        }
    }

    #[inline]
    pub(crate) fn is_temp(&self) -> bool {
        self.temp.is_some()
    }

    #[inline]
    pub(crate) fn is_base(&self) -> bool {
        self.key.is_none()
    }

    #[inline]
    pub(crate) fn is_terminated(&self) -> bool {
        self.terminated.load(Ordering::Acquire)
    }

    /// `self.key <= key`, with the base key below everything.
    #[inline]
    pub(crate) fn starts_at_or_before(&self, key: &K) -> bool {
        self.key.as_ref().is_none_or(|k| k <= key)
    }

    /// `self.key < key`.
    #[inline]
    pub(crate) fn starts_before(&self, key: &K) -> bool {
        self.key.as_ref().is_none_or(|k| k < key)
    }

    #[inline]
    pub(crate) fn head<'g>(&self, guard: &'g Guard) -> &'g Revision<K, V> {
        self.head
            .load(guard)
            .expect("regular nodes always have a head revision")
    }
}

/// Upper bound of a range whose successor is `next`.
#[inline]
pub(crate) fn upper_of<K, V>(next: Option<&Node<K, V>>) -> Option<&K> {
    next.and_then(|n| n.key.as_ref())
}

impl<K, V> Drop for Node<K, V> {
    fn drop(&mut self) {
        for level in self.tower.iter_mut() {
            drop(level.take_owned());
        }
        // Unwind the level-0 chain iteratively.
        let mut next = self.next.take_owned();
        while let Some(node) = next {
            match Arc::into_inner(node) {
                Some(mut owned) => {
                    for level in owned.tower.iter_mut() {
                        drop(level.take_owned());
                    }
                    next = owned.next.take_owned();
                }
                None => break,
            }
        }
    }
}
