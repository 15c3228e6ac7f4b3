//! Sequential reference semantics.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::batch::Batch;
use crate::revision::Op;

/// Identifier of a frozen oracle state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SnapId(pub usize);

/// An ordered map plus every state a snapshot was taken of.
#[derive(Debug, Clone)]
pub struct OracleModel<K, V> {
    state: Arc<BTreeMap<K, V>>,
    snapshots: Vec<Arc<BTreeMap<K, V>>>,
}

impl<K: Ord + Clone, V: Clone> Default for OracleModel<K, V> {
    fn default() -> Self {
        OracleModel {
            state: Arc::new(BTreeMap::new()),
            snapshots: Vec::new(),
        }
    }
}

impl<K: Ord + Clone, V: Clone> OracleModel<K, V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: K, value: V) {
        Arc::make_mut(&mut self.state).insert(key, value);
    }

    pub fn remove(&mut self, key: &K) {
        if self.state.contains_key(key) {
            Arc::make_mut(&mut self.state).remove(key);
        }
    }

    pub fn apply(&mut self, batch: &Batch<K, V>) {
        let state = Arc::make_mut(&mut self.state);
        for (k, op) in batch.ops() {
            match op {
                Op::Put(v) => {
                    state.insert(k.clone(), v.clone());
                }
                Op::Remove => {
                    state.remove(k);
                }
            }
        }
    }

    pub fn get(&self, key: &K) -> Option<V> {
        self.state.get(key).cloned()
    }

    pub fn scan(&self, from: &K, to: &K) -> Vec<(K, V)> {
        range(&self.state, from, to)
    }

    /// Freeze the current state.
    pub fn snapshot(&mut self) -> SnapId {
        self.snapshots.push(self.state.clone());
        SnapId(self.snapshots.len() - 1)
    }

    pub fn get_at(&self, snap: SnapId, key: &K) -> Option<V> {
        self.snapshots[snap.0].get(key).cloned()
    }

    pub fn scan_at(&self, snap: SnapId, from: &K, to: &K) -> Vec<(K, V)> {
        range(&self.snapshots[snap.0], from, to)
    }

    pub fn to_vec(&self) -> Vec<(K, V)> {
        self.state
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }
}

fn range<K: Ord + Clone, V: Clone>(m: &BTreeMap<K, V>, from: &K, to: &K) -> Vec<(K, V)> {
    if from >= to {
        return Vec::new();
    }
    m.range(from.clone()..to.clone())
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}
