use std::collections::BTreeMap;
use std::process::Command;
use std::sync::Arc;
use std::time::Duration;

use mvskip::baseline::LockedBTree;
use mvskip::bench::run::quick;
use mvskip::bench::{
    initial_keys, initial_value, run, run_on, write_csv, write_json, BatchMode, BatchOrder,
    BenchReport, EntrySize, IndexKind, KeyDist, KeyGen, Scenario, Stop, UpdateOp, UpdateStream,
    WorkloadConfig, CSV_HEADER,
};
use mvskip::SkipIndex;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn small(scenario: Scenario, threads: usize) -> WorkloadConfig {
    WorkloadConfig {
        scenario,
        threads,
        dataset_entries: 10_000,
        stop: quick(Duration::from_millis(150)),
        ..WorkloadConfig::default()
    }
}

#[test]
fn zipf_head_to_rank_100_ratio() {
    let s = 0.99;
    let gen = KeyGen::new(100_000, KeyDist::Zipfian(s));
    let mut rng = StdRng::seed_from_u64(9);
    let (mut first, mut hundredth) = (0u64, 0u64);
    for _ in 0..10_000_000 {
        match gen.rank(&mut rng) {
            0 => first += 1,
            99 => hundredth += 1,
            _ => {}
        }
    }
    let expect = 100f64.powf(s);
    let ratio = first as f64 / hundredth as f64;
    assert!(
        (ratio / expect - 1.0).abs() <= 0.05,
        "ratio {ratio}, expected {expect}"
    );
}

#[test]
fn every_scenario_runs_on_both_indexes() {
    for index in [IndexKind::Mvskip, IndexKind::LockedBtree] {
        for scenario in [
            Scenario::UpdateOnly,
            Scenario::UpdateLookup,
            Scenario::MixedShort,
            Scenario::MixedLong,
        ] {
            let threads = if scenario == Scenario::UpdateOnly {
                1
            } else {
                4
            };
            let config = WorkloadConfig {
                index,
                ..small(scenario, threads)
            };
            let r = run(&config).unwrap();
            assert!(r.total.throughput > 0.0, "{index:?} {scenario:?}");
            assert!(r.totals_conserved());
            assert!(
                r.roles.iter().all(|r| r.operations > 0),
                "{index:?} {scenario:?}"
            );
            assert_eq!(r.structure.is_some(), index == IndexKind::Mvskip);
            assert!(r.seconds >= 0.1);
        }
    }
}

#[test]
fn batches_and_wide_entries() {
    for (mode, order) in [
        (BatchMode::Batch10, BatchOrder::Sequential),
        (BatchMode::Batch100, BatchOrder::Random),
    ] {
        let config = WorkloadConfig {
            batch_mode: mode,
            batch_order: order,
            entry_size: EntrySize::Large,
            key_dist: KeyDist::Zipfian(0.99),
            ..small(Scenario::UpdateLookup, 2)
        };
        let r = run(&config).unwrap();
        let updaters = &r.roles[0];
        assert!(updaters.operations > 0);
        assert_eq!(updaters.basic_ops, updaters.operations * mode.size() as u64);
    }
}

fn replay(config: &WorkloadConfig, ops: u64) -> Vec<(u32, u32)> {
    let mut oracle: BTreeMap<u32, u32> = initial_keys(config)
        .into_iter()
        .map(|k| (k as u32, initial_value(k) as u32))
        .collect();
    let mut stream = UpdateStream::new(config, 0);
    let mut apply = |k: u64, v: Option<u64>| match v {
        Some(v) => {
            oracle.insert(k as u32, v as u32);
        }
        None => {
            oracle.remove(&(k as u32));
        }
    };
    for _ in 0..ops {
        match stream.next_op() {
            UpdateOp::Put(k, v) => apply(k, Some(v)),
            UpdateOp::Remove(k) => apply(k, None),
            UpdateOp::Batch(b) => b.into_iter().for_each(|(k, v)| apply(k, v)),
        }
    }
    oracle.into_iter().collect()
}

#[test]
fn counted_runs_are_reproducible_and_match_a_replay() {
    for mode in [BatchMode::Single, BatchMode::Batch10] {
        let config = WorkloadConfig {
            batch_mode: mode,
            batch_order: BatchOrder::Sequential,
            stop: Stop::Ops(3_000),
            ..small(Scenario::UpdateOnly, 1)
        };
        let a = Arc::new(SkipIndex::<u32, u32>::new());
        let b = Arc::new(LockedBTree::<u32, u32>::new());
        let ra = run_on::<u32, u32, _>(&config, &a).unwrap();
        let rb = run_on::<u32, u32, _>(&config, &b).unwrap();
        assert!(ra.is_counted());
        assert_eq!(ra.total.operations, 3_000);
        assert_eq!(ra.total.basic_ops, rb.total.basic_ops);
        assert_eq!(ra.total.basic_ops, 3_000 * mode.size() as u64);
        let expect = replay(&config, 3_000);
        assert_eq!(a.to_vec(), expect);
        assert_eq!(b.to_vec(), expect);
        assert!(a.audit().is_ok());
    }
}

#[test]
fn reports_round_trip() {
    let config = small(Scenario::MixedShort, 4);
    let mut r = run(&config).unwrap();
    // A value the default float parser reads back one ulp off.
    r.total.throughput = 1180179.3343883841;
    let mut json = Vec::new();
    write_json(std::slice::from_ref(&r), &mut json).unwrap();
    let back: Vec<BenchReport> = serde_json::from_slice(&json).unwrap();
    assert_eq!(back, vec![r.clone()]);

    let mut csv = Vec::new();
    write_csv(std::slice::from_ref(&r), &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 1 + r.roles.len() + 1);
    assert!(lines.last().unwrap().contains(",total,4,"));
    let columns = CSV_HEADER.split(',').count();
    assert!(lines.iter().all(|l| l.split(',').count() == columns));
}

#[test]
fn cli_emits_csv() {
    let out = Command::new(env!("CARGO_BIN_EXE_mvskip"))
        .args([
            "bench",
            "--scenario",
            "update-lookup",
            "--threads",
            "2,3",
            "--dataset",
            "2000",
            "--ops",
            "500",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    // Two runs, each with updater, reader and total rows.
    assert_eq!(lines.len(), 7);

    let bad = Command::new(env!("CARGO_BIN_EXE_mvskip"))
        .args([
            "bench",
            "--scenario",
            "mixed-short",
            "--threads",
            "1",
            "--ops",
            "10",
        ])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn cli_checks() {
    let out = Command::new(env!("CARGO_BIN_EXE_mvskip"))
        .args(["check", "--runs", "3", "--ops", "40"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("violations=0"));
    let out = Command::new(env!("CARGO_BIN_EXE_mvskip"))
        .args(["diff", "--runs", "2", "--ops", "2000"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
