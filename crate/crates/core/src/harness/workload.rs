//! Randomized drivers: sequential differential scripts and recorded
//! concurrent runs for the linearizability checker.

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::checker::{check, Verdict, MODEL_KEYS};
use super::history::{Call, History, Recorder, Reply};
use super::oracle::{OracleModel, SnapId};
use crate::autoscale::AutoscaleConfig;
use crate::batch::Batch;
use crate::skiplist::{Config, SkipIndex};
use crate::snapshot::SnapshotHandle;

/// Index with fixed, small revisions so that short runs split and merge a
/// lot.
pub fn small_index<V: crate::IndexValue>(node_size: usize) -> SkipIndex<u32, V> {
    SkipIndex::with_config(Config::default().autoscale(AutoscaleConfig::fixed(node_size)))
}

#[derive(Debug, Clone)]
pub struct DiffOptions {
    pub ops: usize,
    pub key_space: u32,
    /// Target revision size; `None` uses the adaptive default.
    pub node_size: Option<usize>,
}

impl Default for DiffOptions {
    fn default() -> Self {
        DiffOptions {
            ops: 10_000,
            key_space: 4_000,
            node_size: Some(16),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DiffSummary {
    pub ops: usize,
    pub batches: usize,
    pub snapshot_reads: usize,
    pub final_entries: usize,
    pub final_nodes: usize,
}

fn batch_keys(rng: &mut StdRng, key_space: u32, size: usize) -> Vec<u32> {
    if rng.random_bool(0.5) {
        // Consecutive keys from a random start.
        let start = rng.random_range(0..key_space);
        (0..size as u32).map(|i| (start + i) % key_space).collect()
    } else {
        (0..size).map(|_| rng.random_range(0..key_space)).collect()
    }
}

/// Run one seeded single-threaded script against the index and the oracle,
/// comparing every reply. Returns the first divergence.
pub fn run_differential(seed: u64, opts: &DiffOptions) -> Result<DiffSummary, String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let index: SkipIndex<u32, u64> = match opts.node_size {
        Some(n) => small_index(n),
        None => SkipIndex::new(),
    };
    let mut oracle = OracleModel::new();
    let mut snaps: Vec<(SnapshotHandle, SnapId)> = Vec::new();
    let mut summary = DiffSummary::default();
    let ks = opts.key_space;
    let fail = |i: usize, what: String| Err(format!("seed {seed}, op {i}: {what}"));

    for i in 0..opts.ops {
        let k = rng.random_range(0..ks);
        match rng.random_range(0..100) {
            0..=34 => {
                let v = rng.random();
                index.put(k, v);
                oracle.put(k, v);
            }
            35..=54 => {
                index.remove(&k);
                oracle.remove(&k);
            }
            55..=61 => {
                let size = if rng.random_bool(0.7) { 10 } else { 100 };
                let mut b = Batch::new();
                for key in batch_keys(&mut rng, ks, size) {
                    if rng.random_bool(0.7) {
                        b.put(key, rng.random());
                    } else {
                        b.remove(key);
                    }
                }
                oracle.apply(&b);
                index
                    .batch(b)
                    .map_err(|e| format!("seed {seed}, op {i}: batch failed: {e}"))?;
                summary.batches += 1;
            }
            62..=74 => {
                let (a, b) = (index.get(&k), oracle.get(&k));
                if a != b {
                    return fail(i, format!("get({k}) = {a:?}, oracle {b:?}"));
                }
            }
            75..=78 => {
                let mut h = index.register();
                h.refresh().map_err(|e| e.to_string())?;
                snaps.push((h, oracle.snapshot()));
                if snaps.len() > 4 {
                    snaps.remove(0);
                }
            }
            79..=87 if !snaps.is_empty() => {
                let (h, id) = &snaps[rng.random_range(0..snaps.len())];
                let a = index.get_in(&k, h).map_err(|e| e.to_string())?;
                let b = oracle.get_at(*id, &k);
                if a != b {
                    return fail(i, format!("snapshot get({k}) = {a:?}, oracle {b:?}"));
                }
                summary.snapshot_reads += 1;
            }
            88..=93 if !snaps.is_empty() => {
                let (h, id) = &snaps[rng.random_range(0..snaps.len())];
                let to = k.saturating_add(rng.random_range(0..400));
                let a = index.scan_in(&k, &to, h).map_err(|e| e.to_string())?;
                let b = oracle.scan_at(*id, &k, &to);
                if a != b {
                    return fail(
                        i,
                        format!(
                            "snapshot scan [{k}, {to}) differs: {} vs {} entries",
                            a.len(),
                            b.len()
                        ),
                    );
                }
                summary.snapshot_reads += 1;
            }
            94..=98 => {
                let to = k.saturating_add(rng.random_range(0..400));
                let a = index
                    .scan(&k, &to, index.now())
                    .map_err(|e| e.to_string())?;
                let b = oracle.scan(&k, &to);
                if a != b {
                    return fail(
                        i,
                        format!(
                            "scan [{k}, {to}) differs: {} vs {} entries",
                            a.len(),
                            b.len()
                        ),
                    );
                }
            }
            _ => {
                if !snaps.is_empty() {
                    let idx = rng.random_range(0..snaps.len());
                    snaps.remove(idx);
                }
            }
        }
    }
    if index.to_vec() != oracle.to_vec() {
        return Err(format!("seed {seed}: final contents differ"));
    }
    let audit = index.audit();
    if !audit.is_ok() {
        return Err(format!("seed {seed}: audit failed: {:?}", audit.problems));
    }
    summary.ops = opts.ops;
    summary.final_entries = audit.entries;
    summary.final_nodes = audit.nodes.len();
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct LinOptions {
    pub threads: usize,
    pub ops_per_thread: usize,
    /// Target revision size; tiny sizes force structure changes on the
    /// eight-key space.
    pub node_size: usize,
    /// Yield at protocol steps (needs the `hooks` feature) to widen the
    /// interleavings a single core produces.
    pub yield_at_steps: bool,
}

impl Default for LinOptions {
    fn default() -> Self {
        LinOptions {
            threads: 4,
            ops_per_thread: 50,
            node_size: 2,
            yield_at_steps: true,
        }
    }
}

/// Run `opts.threads` threads against one fresh index and record what they
/// observed.
pub fn record_run(seed: u64, opts: &LinOptions) -> History {
    let index: Arc<SkipIndex<u32, u32>> = Arc::new(small_index(opts.node_size));
    let recorder = Arc::new(Recorder::new());
    let barrier = Arc::new(std::sync::Barrier::new(opts.threads));
    let handles: Vec<_> = (0..opts.threads)
        .map(|t| {
            let index = index.clone();
            let recorder = recorder.clone();
            let barrier = barrier.clone();
            let opts = opts.clone();
            std::thread::spawn(move || {
                let mut rng =
                    StdRng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(t as u64));
                #[cfg(feature = "hooks")]
                if opts.yield_at_steps {
                    let mut hook_rng = StdRng::seed_from_u64(seed ^ (t as u64) << 32);
                    crate::hooks::set_hook(move |_| {
                        if hook_rng.random_bool(0.5) {
                            std::thread::yield_now();
                        }
                    });
                }
                let mut log = recorder.log(t);
                let mut handle: Option<(SnapshotHandle, u32)> = None;
                let mut next_snap = (t as u32) << 16;
                let mut next_val = ((t as u32) << 24) | 1;
                barrier.wait();
                for _ in 0..opts.ops_per_thread {
                    if rng.random_bool(0.3) {
                        std::thread::yield_now();
                    }
                    let k = rng.random_range(0..MODEL_KEYS as u32);
                    let kk = k as u8;
                    match rng.random_range(0..100) {
                        0..=24 => {
                            let v = next_val;
                            next_val += 1;
                            log.record(Call::Put(kk, v), || {
                                index.put(k, v);
                                Reply::Done
                            });
                        }
                        25..=39 => {
                            log.record(Call::Remove(kk), || {
                                index.remove(&k);
                                Reply::Done
                            });
                        }
                        40..=49 => {
                            let n = rng.random_range(2..=4);
                            let mut ops = Vec::new();
                            let mut b = Batch::new();
                            for _ in 0..n {
                                let key = rng.random_range(0..MODEL_KEYS as u32);
                                if ops.iter().any(|(x, _)| *x == key as u8) {
                                    continue;
                                }
                                if rng.random_bool(0.7) {
                                    let v = next_val;
                                    next_val += 1;
                                    b.put(key, v);
                                    ops.push((key as u8, Some(v)));
                                } else {
                                    b.remove(key);
                                    ops.push((key as u8, None));
                                }
                            }
                            ops.sort_unstable();
                            log.record(Call::Batch(ops), || {
                                index.batch(b).expect("valid batch");
                                Reply::Done
                            });
                        }
                        50..=69 => {
                            log.record(Call::Get(kk), || Reply::Value(index.get(&k)));
                        }
                        70..=74 => {
                            let id = next_snap;
                            next_snap += 1;
                            let mut h = handle
                                .take()
                                .map(|(h, _)| h)
                                .unwrap_or_else(|| index.register());
                            log.record(Call::Snapshot(id), || {
                                h.refresh().expect("active handle");
                                Reply::Done
                            });
                            handle = Some((h, id));
                        }
                        75..=84 if handle.is_some() => {
                            let (h, id) = handle.as_ref().expect("checked");
                            log.record(Call::GetAt(*id, kk), || {
                                Reply::Value(index.get_in(&k, h).expect("registered"))
                            });
                        }
                        85..=89 if handle.is_some() => {
                            let (h, id) = handle.as_ref().expect("checked");
                            let to = rng.random_range(k..=MODEL_KEYS as u32);
                            log.record(Call::ScanAt(*id, kk, to as u8), || {
                                Reply::Entries(narrow(
                                    index.scan_in(&k, &to, h).expect("registered"),
                                ))
                            });
                        }
                        _ => {
                            let to = rng.random_range(k..=MODEL_KEYS as u32);
                            log.record(Call::Scan(kk, to as u8), || {
                                Reply::Entries(narrow(
                                    index.scan(&k, &to, index.now()).expect("fresh snapshot"),
                                ))
                            });
                        }
                    }
                }
                #[cfg(feature = "hooks")]
                crate::hooks::clear_hook();
                log.into_events()
            })
        })
        .collect();
    let mut events = Vec::new();
    for h in handles {
        events.extend(h.join().expect("worker panicked"));
    }
    let audit = index.audit();
    assert!(
        audit.is_ok(),
        "audit after run {seed}: {:?}",
        audit.problems
    );
    History::new(events)
}

fn narrow(v: Vec<(u32, u32)>) -> Vec<(u8, u32)> {
    v.into_iter().map(|(k, v)| (k as u8, v)).collect()
}

#[derive(Debug, Clone, Default)]
pub struct LinSummary {
    pub runs: usize,
    pub events: usize,
    pub inconclusive: usize,
    pub violations: Vec<(u64, String)>,
}

/// Record and check one run per seed.
pub fn linearizability_stress(
    seeds: impl IntoIterator<Item = u64>,
    opts: &LinOptions,
    budget: usize,
) -> LinSummary {
    let mut s = LinSummary::default();
    for seed in seeds {
        let history = record_run(seed, opts);
        s.runs += 1;
        s.events += history.len();
        match check(&history, budget).0 {
            Verdict::Linearizable => {}
            Verdict::Inconclusive => s.inconclusive += 1,
            Verdict::Violation(msg) => s.violations.push((seed, msg)),
        }
    }
    s
}
