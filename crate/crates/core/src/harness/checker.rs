//! Linearizability checking by backtracking search.
//!
//! Each thread's events are linearized in program order, so a search state
//! is the number of events taken from every thread plus the model state
//! (current map and frozen snapshot states). An event may go next when no
//! other pending event returned before it was invoked. Visited states are
//! memoized, and the search gives up after a configurable number of state
//! expansions.
//!
//! Two reductions keep the search small. A read that fits the current state
//! is placed without branching, since moving it earlier changes nothing for
//! the events around it. Frozen snapshot states are dropped once no pending
//! event refers to them.

use std::collections::{BTreeMap, HashSet};

use super::history::{Call, Event, History, Key, Reply, Val};

/// Keys are `0..MODEL_KEYS`.
pub const MODEL_KEYS: usize = 8;

type State = [Option<Val>; MODEL_KEYS];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Linearizable,
    /// No witness exists. The message names the deepest prefix reached.
    Violation(String),
    /// The budget ran out first.
    Inconclusive,
}

impl Verdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, Verdict::Violation(_))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CheckStats {
    pub expanded: usize,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Node {
    pos: Vec<u16>,
    state: State,
    snaps: BTreeMap<u32, State>,
}

fn apply(
    call: &Call,
    reply: &Reply,
    state: &State,
    snaps: &BTreeMap<u32, State>,
) -> Option<(State, Option<(u32, State)>)> {
    let idx = |k: &Key| usize::from(*k);
    let entries = |s: &State, from: Key, to: Key| -> Vec<(Key, Val)> {
        (from..to.min(MODEL_KEYS as Key))
            .filter_map(|k| s[usize::from(k)].map(|v| (k, v)))
            .collect()
    };
    let mut next = *state;
    match call {
        Call::Put(k, v) => next[idx(k)] = Some(*v),
        Call::Remove(k) => next[idx(k)] = None,
        Call::Batch(ops) => {
            for (k, v) in ops {
                next[idx(k)] = *v;
            }
        }
        Call::Get(k) => {
            if *reply != Reply::Value(state[idx(k)]) {
                return None;
            }
        }
        Call::Snapshot(id) => return Some((next, Some((*id, *state)))),
        Call::GetAt(id, k) => {
            let s = snaps.get(id)?;
            if *reply != Reply::Value(s[idx(k)]) {
                return None;
            }
        }
        Call::ScanAt(id, from, to) => {
            let s = snaps.get(id)?;
            if *reply != Reply::Entries(entries(s, *from, *to)) {
                return None;
            }
        }
        Call::Scan(from, to) => {
            if *reply != Reply::Entries(entries(state, *from, *to)) {
                return None;
            }
        }
    }
    Some((next, None))
}

/// Check `history` with at most `budget` state expansions.
pub fn check(history: &History, budget: usize) -> (Verdict, CheckStats) {
    let threads = history.threads();
    let mut per_thread: Vec<Vec<&Event>> = vec![Vec::new(); threads];
    for e in &history.events {
        for k in keys_of(&e.call) {
            assert!(usize::from(k) < MODEL_KEYS, "key {k} outside the model");
        }
        per_thread[e.thread].push(e);
    }
    for evs in &mut per_thread {
        evs.sort_by_key(|e| e.invoke);
    }
    let total: usize = per_thread.iter().map(Vec::len).sum();
    // For every snapshot id, the last position in each thread that uses it.
    // Once all threads are past those, the frozen state can be dropped.
    let mut last_use: BTreeMap<u32, Vec<Option<usize>>> = BTreeMap::new();
    for (t, evs) in per_thread.iter().enumerate() {
        for (i, e) in evs.iter().enumerate() {
            if let Some(id) = snapshot_of(&e.call) {
                last_use.entry(id).or_insert_with(|| vec![None; threads])[t] = Some(i);
            }
        }
    }
    let dead = |id: u32, pos: &[u16]| {
        last_use[&id]
            .iter()
            .zip(pos)
            .all(|(last, &p)| last.is_none_or(|i| usize::from(p) > i))
    };

    let mut seen: HashSet<Node> = HashSet::new();
    let mut stats = CheckStats::default();
    let mut deepest = (0usize, None::<String>);
    let root = Node {
        pos: vec![0; threads],
        state: [None; MODEL_KEYS],
        snaps: BTreeMap::new(),
    };
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        let done: usize = node.pos.iter().map(|&p| usize::from(p)).sum();
        if done == total {
            return (Verdict::Linearizable, stats);
        }
        if !seen.insert(node.clone()) {
            continue;
        }
        stats.expanded += 1;
        if stats.expanded > budget {
            return (Verdict::Inconclusive, stats);
        }
        let fronts: Vec<Option<&Event>> = (0..threads)
            .map(|t| per_thread[t].get(usize::from(node.pos[t])).copied())
            .collect();
        let min_response = fronts
            .iter()
            .flatten()
            .map(|e| e.response)
            .min()
            .unwrap_or(u64::MAX);
        let mut placed_any = false;
        let mut children = Vec::new();
        for (t, front) in fronts.iter().enumerate() {
            let Some(e) = front else { continue };
            if e.invoke > min_response {
                continue;
            }
            if let Some((state, snap)) = apply(&e.call, &e.reply, &node.state, &node.snaps) {
                placed_any = true;
                let mut child = Node {
                    pos: node.pos.clone(),
                    state,
                    snaps: node.snaps.clone(),
                };
                child.pos[t] += 1;
                if let Some((id, s)) = snap {
                    child.snaps.insert(id, s);
                }
                child.snaps.retain(|&id, _| !dead(id, &child.pos));
                if is_read(&e.call) {
                    // A fitting read can go first in any witness from here,
                    // so the other orders need not be tried.
                    children = vec![child];
                    break;
                }
                children.push(child);
            }
        }
        stack.extend(children);
        if !placed_any && done >= deepest.0 {
            let blocked: Vec<String> = fronts
                .iter()
                .flatten()
                .filter(|e| e.invoke <= min_response)
                .map(|e| format!("t{} {:?} -> {:?}", e.thread, e.call, e.reply))
                .collect();
            deepest = (
                done,
                Some(format!(
                    "after {done} of {total} events, state {:?}; no candidate fits: {}",
                    node.state,
                    blocked.join("; ")
                )),
            );
        }
    }
    let msg = deepest.1.unwrap_or_else(|| "no witness".to_string());
    (Verdict::Violation(msg), stats)
}

fn is_read(call: &Call) -> bool {
    matches!(
        call,
        Call::Get(_) | Call::GetAt(..) | Call::ScanAt(..) | Call::Scan(..)
    )
}

fn snapshot_of(call: &Call) -> Option<u32> {
    match call {
        Call::Snapshot(id) | Call::GetAt(id, _) | Call::ScanAt(id, ..) => Some(*id),
        _ => None,
    }
}

fn keys_of(call: &Call) -> Vec<Key> {
    match call {
        Call::Put(k, _) | Call::Remove(k) | Call::Get(k) | Call::GetAt(_, k) => vec![*k],
        Call::Batch(ops) => ops.iter().map(|(k, _)| *k).collect(),
        Call::Snapshot(_) | Call::ScanAt(..) | Call::Scan(..) => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(thread: usize, call: Call, reply: Reply, invoke: u64, response: u64) -> Event {
        Event {
            thread,
            call,
            reply,
            invoke,
            response,
        }
    }

    fn run(events: Vec<Event>) -> Verdict {
        check(&History::new(events), 100_000).0
    }

    #[test]
    fn sequential_history_is_linearizable() {
        let h = vec![
            ev(0, Call::Put(1, 10), Reply::Done, 0, 1),
            ev(0, Call::Snapshot(0), Reply::Done, 2, 3),
            ev(
                0,
                Call::Batch(vec![(1, None), (2, Some(5))]),
                Reply::Done,
                4,
                5,
            ),
            ev(0, Call::Get(1), Reply::Value(None), 6, 7),
            ev(0, Call::GetAt(0, 1), Reply::Value(Some(10)), 8, 9),
            ev(0, Call::Scan(0, 8), Reply::Entries(vec![(2, 5)]), 10, 11),
            ev(
                0,
                Call::ScanAt(0, 0, 8),
                Reply::Entries(vec![(1, 10)]),
                12,
                13,
            ),
        ];
        assert_eq!(run(h), Verdict::Linearizable);
    }

    #[test]
    fn stale_read_after_acknowledged_write_is_rejected() {
        let h = vec![
            ev(0, Call::Put(1, 10), Reply::Done, 0, 1),
            ev(1, Call::Get(1), Reply::Value(None), 2, 3),
        ];
        assert!(run(h).is_violation());
    }

    #[test]
    fn overlapping_operations_may_reorder() {
        let h = vec![
            ev(0, Call::Put(1, 10), Reply::Done, 0, 3),
            ev(1, Call::Get(1), Reply::Value(None), 1, 2),
        ];
        assert_eq!(run(h), Verdict::Linearizable);
    }

    #[test]
    fn torn_batch_is_rejected() {
        let h = vec![
            ev(
                0,
                Call::Batch(vec![(1, Some(1)), (2, Some(1))]),
                Reply::Done,
                0,
                5,
            ),
            ev(1, Call::Scan(0, 8), Reply::Entries(vec![(1, 1)]), 1, 4),
        ];
        assert!(run(h).is_violation());
    }

    #[test]
    fn snapshot_reads_use_the_acquisition_state() {
        // The snapshot overlaps the put, so either state is fine, but both
        // reads through it must agree.
        let ok = vec![
            ev(0, Call::Put(3, 1), Reply::Done, 0, 3),
            ev(1, Call::Snapshot(7), Reply::Done, 1, 2),
            ev(1, Call::GetAt(7, 3), Reply::Value(None), 4, 5),
            ev(0, Call::Put(3, 2), Reply::Done, 6, 7),
            ev(1, Call::ScanAt(7, 0, 8), Reply::Entries(vec![]), 8, 9),
        ];
        assert_eq!(run(ok), Verdict::Linearizable);
        let bad = vec![
            ev(0, Call::Put(3, 1), Reply::Done, 0, 3),
            ev(1, Call::Snapshot(7), Reply::Done, 1, 2),
            ev(1, Call::GetAt(7, 3), Reply::Value(None), 4, 5),
            ev(1, Call::ScanAt(7, 0, 8), Reply::Entries(vec![(3, 1)]), 6, 7),
        ];
        assert!(run(bad).is_violation());
    }

    #[test]
    fn budget_exhaustion_is_inconclusive() {
        let mut h = Vec::new();
        for t in 0..4 {
            for i in 0..20u64 {
                h.push(ev(
                    t,
                    Call::Put((i % 8) as u8, t as u32),
                    Reply::Done,
                    i * 10 + t as u64,
                    i * 10 + 9,
                ));
            }
        }
        let h = History::new(h);
        assert_eq!(check(&h, 10).0, Verdict::Inconclusive);
    }
}
