//! Scripted interleavings of the split, merge and batch protocols, shared
//! by the protocol tests and the acceptance suite.
//!
//! A worker thread is frozen at a chosen step through the `hooks` feature
//! while the test thread runs other operations, then released.

use std::collections::{BTreeMap, HashMap};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use mvskip::hooks::{clear_hook, set_hook, HookPoint};
use mvskip::{AutoscaleConfig, Batch, Config, RevisionKind, SkipIndex};

type Index = SkipIndex<u32, u32>;

fn fixed(size: usize) -> Arc<Index> {
    Arc::new(SkipIndex::with_config(
        Config::default().autoscale(AutoscaleConfig::fixed(size)),
    ))
}

/// A thread that stops at each listed hook occurrence until resumed.
struct Paused<T> {
    arrived: Receiver<HookPoint>,
    resume: Sender<()>,
    handle: JoinHandle<T>,
}

fn spawn_paused<T, F>(stops: Vec<(HookPoint, usize)>, f: F) -> Paused<T>
where
    T: Send + 'static,
    F: FnOnce() -> T + Send + 'static,
{
    let (arrived_tx, arrived) = channel();
    let (resume, resume_rx) = channel::<()>();
    let handle = std::thread::spawn(move || {
        let mut seen: HashMap<HookPoint, usize> = HashMap::new();
        let mut stops = stops.into_iter().peekable();
        set_hook(move |p| {
            let n = seen.entry(p).or_default();
            *n += 1;
            if stops.peek() == Some(&(p, *n)) {
                stops.next();
                arrived_tx.send(p).expect("test thread alive");
                resume_rx.recv().expect("test thread resumes");
            }
        });
        let out = f();
        clear_hook();
        out
    });
    Paused {
        arrived,
        resume,
        handle,
    }
}

impl<T> Paused<T> {
    fn wait(&self, point: HookPoint) {
        match self.arrived.recv_timeout(Duration::from_secs(20)) {
            Ok(p) => assert_eq!(p, point),
            Err(RecvTimeoutError::Timeout) => panic!("{point:?} not reached in time"),
            Err(RecvTimeoutError::Disconnected) => panic!("worker finished before {point:?}"),
        }
    }

    fn resume(&self) {
        self.resume.send(()).expect("worker waiting");
    }

    fn finish(self) -> T {
        drop(self.resume);
        self.handle.join().expect("worker panicked")
    }
}

fn node_keys(index: &Index) -> Vec<Option<u32>> {
    index.audit().nodes.iter().map(|n| n.key).collect()
}

fn assert_sound(index: &Index, oracle: &BTreeMap<u32, u32>) {
    let audit = index.audit();
    assert!(audit.is_ok(), "{:?}", audit.problems);
    assert_eq!(audit.temp_nodes, 0);
    assert_eq!(audit.pending_heads, 0);
    let expect: Vec<(u32, u32)> = oracle.iter().map(|(k, v)| (*k, *v)).collect();
    assert_eq!(index.to_vec(), expect);
    assert_eq!(index.scan(&0, &u32::MAX, index.now()).unwrap(), expect);
}

pub fn split_is_completed_by_helpers_at_every_step() {
    for point in [
        HookPoint::SplitInstalled,
        HookPoint::BeforeTempInsert,
        HookPoint::TempInserted,
        HookPoint::BeforeNodeLink,
    ] {
        let index = fixed(8);
        let mut oracle = BTreeMap::new();
        for k in 0..12u32 {
            index.put(k * 10, k);
            oracle.insert(k * 10, k);
        }
        assert_eq!(node_keys(&index), vec![None]);

        let a = {
            let index = index.clone();
            spawn_paused(vec![(point, 1)], move || index.put(120, 12))
        };
        a.wait(point);
        oracle.insert(120, 12);
        // Latest reads do not help, so the split is still unfinished here.
        assert_eq!(index.get(&50), Some(5), "{point:?}");
        // Updates on the upper half help the split before they proceed.
        index.put(115, 1);
        index.put(95, 2);
        oracle.insert(115, 1);
        oracle.insert(95, 2);
        assert_eq!(index.get(&120), Some(12), "{point:?}");
        assert_eq!(index.audit().temp_nodes, 0, "{point:?}");
        a.resume();
        a.finish();

        assert_eq!(index.audit().nodes.len(), 2, "{point:?}");
        assert_sound(&index, &oracle);
    }
}

pub fn stale_temporary_node_after_split_and_merge_back() {
    let index = fixed(4);
    let mut oracle = BTreeMap::new();
    for k in (0..60u32).step_by(10) {
        index.put(k, k);
        oracle.insert(k, k);
    }
    let a = {
        let index = index.clone();
        spawn_paused(
            vec![
                (HookPoint::BeforeTempInsert, 1),
                (HookPoint::TempInserted, 1),
            ],
            move || index.put(60, 60),
        )
    };
    a.wait(HookPoint::BeforeTempInsert);
    oracle.insert(60, 60);

    // Finish the split through a helping update, then empty the new node
    // until it merges back into the base node.
    index.put(1, 1);
    oracle.insert(1, 1);
    let keys = node_keys(&index);
    assert_eq!(keys.len(), 2);
    let right = keys[1].unwrap();
    let mut removable: Vec<u32> = oracle.range(right..).map(|(k, _)| *k).collect();
    removable.pop();
    for k in removable {
        index.remove(&k);
        oracle.remove(&k);
    }
    assert_eq!(node_keys(&index), vec![None], "the right node merged back");

    // The base node's successor is the same as when the split began, so
    // the delayed temporary node insertion goes through.
    a.resume();
    a.wait(HookPoint::TempInserted);
    assert_eq!(index.audit().temp_nodes, 1);
    assert_eq!(index.get(&60), Some(60));
    let expect: Vec<(u32, u32)> = oracle.iter().map(|(k, v)| (*k, *v)).collect();
    assert_eq!(index.scan(&0, &100, index.now()).unwrap(), expect);
    index.put(61, 61);
    oracle.insert(61, 61);
    a.resume();
    a.finish();
    assert_sound(&index, &oracle);
}

/// Two nodes: base with keys 0..=2 and one more whose entries are returned.
fn two_nodes() -> (Arc<Index>, BTreeMap<u32, u32>, u32) {
    let index = fixed(4);
    let mut oracle = BTreeMap::new();
    for k in 0..7u32 {
        index.put(k * 10, k);
        oracle.insert(k * 10, k);
    }
    let keys = node_keys(&index);
    assert_eq!(keys.len(), 2, "seven entries split a size-4 node");
    let right = keys[1].unwrap();
    // Leave two entries on the right node, one removal from merging.
    let upper: Vec<u32> = oracle.range(right..).map(|(k, _)| *k).collect();
    for k in &upper[2..] {
        index.remove(k);
        oracle.remove(k);
    }
    assert_eq!(node_keys(&index).len(), 2);
    (index, oracle, right)
}

pub fn merge_finalizes_a_pending_update_on_the_predecessor() {
    let (index, mut oracle, right) = two_nodes();
    let before = index.register();
    let right_keys: Vec<u32> = oracle.range(right..).map(|(k, _)| *k).collect();

    let a = {
        let index = index.clone();
        spawn_paused(vec![(HookPoint::BeforeFinalize, 1)], move || {
            index.put(0, 99)
        })
    };
    a.wait(HookPoint::BeforeFinalize);
    oracle.insert(0, 99);
    assert_eq!(index.get(&0), Some(0), "pending updates are invisible");

    let seen = Arc::new(Mutex::new(None));
    let b = {
        let index = index.clone();
        let seen = seen.clone();
        let victim = right_keys[0];
        std::thread::spawn(move || {
            let reader = index.clone();
            set_hook(move |p| {
                if p == HookPoint::BeforeMergeInstall {
                    *seen.lock().unwrap() = Some(reader.get(&0));
                }
            });
            index.remove(&victim);
            clear_hook();
        })
    };
    b.join().unwrap();
    oracle.remove(&right_keys[0]);
    assert_eq!(
        *seen.lock().unwrap(),
        Some(Some(99)),
        "finalized before the merge"
    );

    let audit = index.audit();
    assert!(audit.is_ok(), "{:?}", audit.problems);
    assert_eq!(audit.nodes.len(), 1);
    let base = &audit.nodes[0];
    assert_eq!(base.head_kind, RevisionKind::Merge);
    assert_eq!(base.right_key, Some(right));
    let (kind, v) = base.revisions[1];
    assert_eq!(kind, RevisionKind::Regular);
    assert!(v.is_final() && v < base.head_version);

    // The old snapshot still reaches the merged node's entries.
    assert_eq!(index.get_in(&0, &before).unwrap(), Some(0));
    for k in &right_keys {
        assert!(index.get_in(k, &before).unwrap().is_some(), "{k}");
    }
    assert_eq!(index.get(&right_keys[0]), None);

    a.resume();
    a.finish();
    assert_sound(&index, &oracle);
}

pub fn merge_is_installed_once_with_two_helpers() {
    for point in [
        HookPoint::TerminatorInstalled,
        HookPoint::BeforeMergeInstall,
    ] {
        let (index, mut oracle, right) = two_nodes();
        let victim = *oracle.range(right..).next().unwrap().0;
        let a = {
            let index = index.clone();
            spawn_paused(vec![(point, 1)], move || index.remove(&victim))
        };
        a.wait(point);
        oracle.remove(&victim);
        // An update in the merged range helps the merge first.
        index.put(victim + 1, 7);
        oracle.insert(victim + 1, 7);
        a.resume();
        a.finish();

        let audit = index.audit();
        assert_eq!(audit.nodes.len(), 1, "{point:?}");
        let merges = audit.nodes[0]
            .revisions
            .iter()
            .filter(|(k, _)| *k == RevisionKind::Merge)
            .count();
        assert_eq!(merges, 1, "{point:?}");
        assert_sound(&index, &oracle);
    }
}

/// Three nodes and a batch touching each of them.
fn three_nodes() -> (Arc<Index>, BTreeMap<u32, u32>, Vec<u32>) {
    let index = fixed(4);
    let mut oracle = BTreeMap::new();
    for k in 0..12u32 {
        index.put(k * 10, k);
        oracle.insert(k * 10, k);
    }
    let keys: Vec<u32> = node_keys(&index).into_iter().flatten().collect();
    assert!(keys.len() >= 2, "{keys:?}");
    (index, oracle, keys)
}

pub fn helper_finishes_a_batch_on_the_lowest_node() {
    let (index, mut oracle, keys) = three_nodes();
    let nodes = keys.len() + 1;
    // One key per node: the base range first, then each node key.
    let targets: Vec<u32> = std::iter::once(1)
        .chain(keys.iter().map(|k| k + 1))
        .collect();
    let low_before = index.revision_count(&1);

    let a = {
        let index = index.clone();
        let targets = targets.clone();
        spawn_paused(vec![(HookPoint::BatchNodeApplied, nodes - 1)], move || {
            let mut b = Batch::new();
            for k in targets {
                b.put(k, 500 + k);
            }
            index.batch(b).unwrap();
        })
    };
    a.wait(HookPoint::BatchNodeApplied);
    for &k in &targets {
        oracle.insert(k, 500 + k);
    }
    // Only the lowest node lacks the batch. Latest reads see none of it.
    assert_eq!(index.get(&targets[nodes - 1]), None);
    assert_eq!(index.revision_count(&1), low_before);

    // An update on the highest node finds the batch pending there and
    // completes it, including the lowest node.
    let high = *keys.last().unwrap();
    index.put(high + 2, 3);
    oracle.insert(high + 2, 3);
    assert_eq!(index.revision_count(&1), low_before + 1);
    for &k in &targets {
        assert_eq!(index.get(&k), Some(500 + k), "{k}");
    }
    a.resume();
    a.finish();
    assert_eq!(
        index.revision_count(&1),
        low_before + 1,
        "no second batch revision"
    );
    assert_sound(&index, &oracle);
}

pub fn batch_remove_of_an_absent_key_is_replayed() {
    let (index, mut oracle, keys) = three_nodes();
    let k = 5u32;
    let j = keys.last().unwrap() + 1;
    assert!(!oracle.contains_key(&k));

    let a = {
        let index = index.clone();
        spawn_paused(vec![(HookPoint::BatchNodeApplied, 1)], move || {
            let mut b = Batch::new();
            b.remove(k).put(j, 42);
            index.batch(b).unwrap();
        })
    };
    a.wait(HookPoint::BatchNodeApplied);
    // The batch has covered j's node only; a put on k's node goes first.
    index.put(k, 5);
    let mid = index.register();
    assert_eq!(index.get_in(&k, &mid).unwrap(), Some(5));
    assert_eq!(index.get(&k), Some(5));
    a.resume();
    a.finish();
    oracle.insert(j, 42);

    let after = index.register();
    assert_eq!(index.get_in(&k, &after).unwrap(), None);
    assert_eq!(index.get(&k), None);
    assert_eq!(index.get(&j), Some(42));
    assert_eq!(
        index.get_in(&k, &mid).unwrap(),
        Some(5),
        "old snapshot unchanged"
    );
    assert_sound(&index, &oracle);

    // A lone batch removing an absent key still installs a revision.
    let before = index.revision_count(&7);
    let mut b = Batch::new();
    b.remove(7);
    index.batch(b).unwrap();
    assert_eq!(index.revision_count(&7), before + 1);
    oracle.remove(&7);
    assert_sound(&index, &oracle);
}

pub fn snapshot_read_of_a_pending_head() {
    for _ in 0..20 {
        let index = fixed(8);
        index.put(3u32, 1u32);
        let a = {
            let index = index.clone();
            spawn_paused(vec![(HookPoint::BeforeFinalize, 1)], move || {
                index.put(3, 7)
            })
        };
        a.wait(HookPoint::BeforeFinalize);
        assert_eq!(index.get(&3), Some(1));
        let s = index.register();
        let snap = s.version().unwrap();
        let got = index.get_in(&3, &s).unwrap();
        let audit = index.audit();
        let f = audit.nodes[0].head_version;
        assert!(f.is_final(), "the snapshot read helped finalize");
        assert_eq!(
            got == Some(7),
            f <= snap,
            "f={f:?} snap={snap:?} got={got:?}"
        );
        assert!(got.is_some());
        a.resume();
        a.finish();
        assert_eq!(index.get(&3), Some(7));
    }
}

/// Every fixture with its name. Only the acceptance suite iterates it.
#[allow(dead_code)]
pub const ALL: &[(&str, fn())] = &[
    (
        "split_is_completed_by_helpers_at_every_step",
        split_is_completed_by_helpers_at_every_step,
    ),
    (
        "stale_temporary_node_after_split_and_merge_back",
        stale_temporary_node_after_split_and_merge_back,
    ),
    (
        "merge_finalizes_a_pending_update_on_the_predecessor",
        merge_finalizes_a_pending_update_on_the_predecessor,
    ),
    (
        "merge_is_installed_once_with_two_helpers",
        merge_is_installed_once_with_two_helpers,
    ),
    (
        "helper_finishes_a_batch_on_the_lowest_node",
        helper_finishes_a_batch_on_the_lowest_node,
    ),
    (
        "batch_remove_of_an_absent_key_is_replayed",
        batch_remove_of_an_absent_key_is_replayed,
    ),
    (
        "snapshot_read_of_a_pending_head",
        snapshot_read_of_a_pending_head,
    ),
];
