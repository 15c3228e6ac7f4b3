use std::sync::atomic::{AtomicU8, Ordering};
use std::sync::{Arc, Barrier};
use std::time::{Duration, Instant};

use hdrhistogram::Histogram;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use super::config::{BatchOrder, ConfigError, EntrySize, IndexKind, Role, Stop, WorkloadConfig};
use super::keys::{BenchKey, BenchValue, KeyGen};
use super::report::{BenchReport, Latency, RoleReport, StructureReport, TotalReport};
use crate::baseline::{LockedBTree, OrderedIndex};
use crate::batch::Batch;
use crate::skiplist::SkipIndex;

const WARMUP: u8 = 0;
const MEASURE: u8 = 1;
const STOP: u8 = 2;

/// One update issued by an updater thread, in key numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UpdateOp {
    Put(u64, u64),
    Remove(u64),
    Batch(Vec<(u64, Option<u64>)>),
}

/// The deterministic sequence of updates of one updater thread.
pub struct UpdateStream {
    keys: KeyGen,
    rng: StdRng,
    batch: usize,
    order: BatchOrder,
    next_value: u64,
}

fn thread_seed(seed: u64, thread: usize) -> u64 {
    seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ (thread as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

impl UpdateStream {
    pub fn new(config: &WorkloadConfig, thread: usize) -> Self {
        UpdateStream {
            keys: KeyGen::new(config.dataset_entries, config.key_dist),
            rng: StdRng::seed_from_u64(thread_seed(config.seed, thread)),
            batch: config.batch_mode.size(),
            order: config.batch_order,
            next_value: (thread as u64) << 40,
        }
    }

    fn value(&mut self) -> u64 {
        self.next_value += 1;
        self.next_value
    }

    /// Puts and removes are equally likely, which keeps the dataset near
    /// half the key universe.
    fn op_for(&mut self) -> Option<u64> {
        self.rng.random_bool(0.5).then(|| self.value())
    }

    pub fn next_op(&mut self) -> UpdateOp {
        if self.batch == 1 {
            let k = self.keys.next(&mut self.rng);
            return match self.op_for() {
                Some(v) => UpdateOp::Put(k, v),
                None => UpdateOp::Remove(k),
            };
        }
        let n = self.keys.universe();
        let mut keys: Vec<u64> = match self.order {
            BatchOrder::Sequential => {
                let start = self.keys.next(&mut self.rng);
                (0..self.batch as u64).map(|i| (start + i) % n).collect()
            }
            BatchOrder::Random => {
                let mut ks = Vec::with_capacity(self.batch);
                while ks.len() < self.batch {
                    let k = self.keys.next(&mut self.rng);
                    if !ks.contains(&k) {
                        ks.push(k);
                    }
                }
                ks
            }
        };
        keys.sort_unstable();
        UpdateOp::Batch(keys.into_iter().map(|k| (k, self.op_for())).collect())
    }
}

/// Keys present before the run: a seeded half of the universe.
pub fn initial_keys(config: &WorkloadConfig) -> Vec<u64> {
    let mut all: Vec<u64> = (0..config.dataset_entries).collect();
    all.shuffle(&mut StdRng::seed_from_u64(config.seed));
    all.truncate((config.dataset_entries / 2) as usize);
    all.sort_unstable();
    all
}

/// Value stored for a key during pre-population.
pub fn initial_value(key: u64) -> u64 {
    key
}

/// Structure statistics of an index, when it has any.
pub trait Inspect {
    fn structure(&self) -> Option<StructureReport>;
}

impl<K: crate::IndexKey, V: crate::IndexValue> Inspect for SkipIndex<K, V> {
    fn structure(&self) -> Option<StructureReport> {
        let audit = self.audit();
        Some(StructureReport::from_sizes(
            audit.nodes.iter().map(|n| n.entries).collect(),
            audit.max_list_len(),
        ))
    }
}

impl<K, V> Inspect for LockedBTree<K, V> {
    fn structure(&self) -> Option<StructureReport> {
        None
    }
}

struct ThreadResult {
    role: Role,
    operations: u64,
    basic_ops: u64,
    latency: Histogram<u64>,
}

fn new_histogram() -> Histogram<u64> {
    Histogram::new_with_bounds(1, 60_000_000_000, 3).expect("static bounds")
}

/// Build the configured index, run the workload and report.
pub fn run(config: &WorkloadConfig) -> Result<BenchReport, ConfigError> {
    config.validate()?;
    Ok(match (config.index, config.entry_size) {
        (IndexKind::Mvskip, EntrySize::Small) => {
            run_on::<u32, u32, _>(config, &Arc::new(SkipIndex::new()))?
        }
        (IndexKind::Mvskip, EntrySize::Large) => {
            run_on::<[u8; 16], [u8; 100], _>(config, &Arc::new(SkipIndex::new()))?
        }
        (IndexKind::LockedBtree, EntrySize::Small) => {
            run_on::<u32, u32, _>(config, &Arc::new(LockedBTree::new()))?
        }
        (IndexKind::LockedBtree, EntrySize::Large) => {
            run_on::<[u8; 16], [u8; 100], _>(config, &Arc::new(LockedBTree::new()))?
        }
    })
}

/// Pre-populate `index` and run the workload against it. The index is left
/// in its final state for inspection.
pub fn run_on<K, V, I>(config: &WorkloadConfig, index: &Arc<I>) -> Result<BenchReport, ConfigError>
where
    K: BenchKey,
    V: BenchValue,
    I: OrderedIndex<K, V> + Inspect + 'static,
{
    config.validate()?;
    for k in initial_keys(config) {
        index.put(K::from_num(k), V::from_num(initial_value(k)));
    }

    let roles = config.roles();
    let phase = Arc::new(AtomicU8::new(match config.stop {
        Stop::Timed { .. } => WARMUP,
        Stop::Ops(_) => MEASURE,
    }));
    // Workers plus the coordinating thread.
    let barrier = Arc::new(Barrier::new(roles.len() + 1));
    let workers: Vec<_> = roles
        .iter()
        .enumerate()
        .map(|(t, &role)| {
            let index = index.clone();
            let config = config.clone();
            let phase = phase.clone();
            let barrier = barrier.clone();
            std::thread::Builder::new()
                .name(format!("bench-{}-{t}", role.name()))
                .spawn(move || worker::<K, V, I>(&*index, role, &config, t, &phase, &barrier))
                .expect("spawn worker")
        })
        .collect();

    barrier.wait();
    let started = Instant::now();
    let measured = match config.stop {
        Stop::Timed { warmup, duration } => {
            std::thread::sleep(warmup);
            phase.store(MEASURE, Ordering::SeqCst);
            let from = Instant::now();
            std::thread::sleep(duration);
            phase.store(STOP, Ordering::SeqCst);
            Some(from.elapsed())
        }
        Stop::Ops(_) => None,
    };
    let results: Vec<ThreadResult> = workers
        .into_iter()
        .map(|w| w.join().expect("bench worker panicked"))
        .collect();
    let seconds = measured.unwrap_or_else(|| started.elapsed()).as_secs_f64();
    Ok(assemble(
        config,
        &roles,
        results,
        seconds,
        index.structure(),
    ))
}

fn worker<K, V, I>(
    index: &I,
    role: Role,
    config: &WorkloadConfig,
    thread: usize,
    phase: &AtomicU8,
    barrier: &Barrier,
) -> ThreadResult
where
    K: BenchKey,
    V: BenchValue,
    I: OrderedIndex<K, V>,
{
    let mut res = ThreadResult {
        role,
        operations: 0,
        basic_ops: 0,
        latency: new_histogram(),
    };
    let limit = match config.stop {
        Stop::Ops(n) => n,
        Stop::Timed { .. } => u64::MAX,
    };
    let keys = KeyGen::new(config.dataset_entries, config.key_dist);
    let mut rng = StdRng::seed_from_u64(thread_seed(config.seed, thread) ^ 0x5bd1_e995);
    let mut updates = UpdateStream::new(config, thread);
    let scan_len = config.scenario.scan_len();
    let mut snap = (role == Role::Scanner).then(|| index.snapshot());

    barrier.wait();
    let mut issued = 0u64;
    while issued < limit {
        let p = phase.load(Ordering::Relaxed);
        if p == STOP {
            break;
        }
        let t0 = Instant::now();
        let basic = match role {
            Role::Updater => match updates.next_op() {
                UpdateOp::Put(k, v) => {
                    index.put(K::from_num(k), V::from_num(v));
                    1
                }
                UpdateOp::Remove(k) => {
                    index.remove(&K::from_num(k));
                    1
                }
                UpdateOp::Batch(ops) => {
                    let n = ops.len() as u64;
                    let mut b = Batch::new();
                    for (k, v) in ops {
                        match v {
                            Some(v) => b.put(K::from_num(k), V::from_num(v)),
                            None => b.remove(K::from_num(k)),
                        };
                    }
                    index.apply(b);
                    n
                }
            },
            Role::Reader => {
                std::hint::black_box(index.get(&K::from_num(keys.next(&mut rng))));
                1
            }
            Role::Scanner => {
                let s = snap.as_mut().expect("scanners hold a snapshot");
                index.refresh(s);
                let from = K::from_num(keys.next(&mut rng));
                index.scan_n_at(s, &from, scan_len, &mut |k, v| {
                    std::hint::black_box((k, v));
                }) as u64
            }
        };
        issued += 1;
        if p == MEASURE {
            let ns = (t0.elapsed().as_nanos() as u64).max(1);
            res.latency.saturating_record(ns);
            res.operations += 1;
            res.basic_ops += basic;
        }
    }
    res
}

fn assemble(
    config: &WorkloadConfig,
    roles: &[Role],
    results: Vec<ThreadResult>,
    seconds: f64,
    structure: Option<StructureReport>,
) -> BenchReport {
    let mut role_reports = Vec::new();
    let mut all = new_histogram();
    for role in Role::ALL {
        let threads = roles.iter().filter(|r| **r == role).count();
        if threads == 0 {
            continue;
        }
        let mut hist = new_histogram();
        let (mut operations, mut basic_ops) = (0, 0);
        for r in results.iter().filter(|r| r.role == role) {
            hist.add(&r.latency).expect("same bounds");
            operations += r.operations;
            basic_ops += r.basic_ops;
        }
        all.add(&hist).expect("same bounds");
        role_reports.push(RoleReport {
            role,
            threads,
            operations,
            basic_ops,
            throughput: basic_ops as f64 / seconds,
            latency: Latency::from_histogram(&hist),
        });
    }
    let operations = role_reports.iter().map(|r| r.operations).sum();
    let basic_ops: u64 = role_reports.iter().map(|r| r.basic_ops).sum();
    BenchReport {
        config: config.clone(),
        seconds,
        roles: role_reports,
        total: TotalReport {
            threads: roles.len(),
            operations,
            basic_ops,
            throughput: basic_ops as f64 / seconds,
            latency: Latency::from_histogram(&all),
        },
        structure,
    }
}

/// Short timed runs for smoke tests.
pub fn quick(duration: Duration) -> Stop {
    Stop::Timed {
        warmup: Duration::ZERO,
        duration,
    }
}
