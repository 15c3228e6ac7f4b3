use std::collections::BTreeMap;

use mvskip::autoscale::{on_read, on_update};
use mvskip::bench::{Scenario, WorkloadConfig};
use mvskip::clock::Clock;
use mvskip::{AutoscaleConfig, Batch, Config, Entries, SkipIndex};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Step {
    Put(u16, u32),
    Remove(u16),
    Batch(Vec<(u16, Option<u32>)>),
    Snapshot,
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        5 => (0..200u16, any::<u32>()).prop_map(|(k, v)| Step::Put(k, v)),
        3 => (0..200u16).prop_map(Step::Remove),
        1 => prop::collection::vec((0..200u16, prop::option::of(any::<u32>())), 1..12).prop_map(Step::Batch),
        1 => Just(Step::Snapshot),
    ]
}

fn low_hash(k: &u32) -> u16 {
    (*k % 3) as u16
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_matches_oracle_at_every_snapshot(steps in prop::collection::vec(step(), 1..400), size in 2usize..12) {
        let index = SkipIndex::with_config(Config::default().autoscale(AutoscaleConfig::fixed(size)));
        let mut oracle: BTreeMap<u32, u32> = BTreeMap::new();
        let mut snaps = Vec::new();
        for s in steps {
            match s {
                Step::Put(k, v) => {
                    index.put(u32::from(k), v);
                    oracle.insert(u32::from(k), v);
                }
                Step::Remove(k) => {
                    index.remove(&u32::from(k));
                    oracle.remove(&u32::from(k));
                }
                Step::Batch(ops) => {
                    let mut b = Batch::new();
                    for (k, v) in ops {
                        // Later operations on a key replace earlier ones.
                        match v {
                            Some(v) => {
                                b.put(u32::from(k), v);
                                oracle.insert(u32::from(k), v);
                            }
                            None => {
                                b.remove(u32::from(k));
                                oracle.remove(&u32::from(k));
                            }
                        }
                    }
                    index.batch(b).unwrap();
                }
                Step::Snapshot => snaps.push((index.register(), oracle.clone())),
            }
        }
        let audit = index.audit();
        prop_assert!(audit.is_ok(), "{:?}", audit.problems);
        prop_assert_eq!(audit.pending_heads, 0);
        prop_assert_eq!(audit.temp_nodes, 0);
        prop_assert_eq!(audit.stale_index_entries, 0);
        // Ranges tile the key space in order.
        let keys: Vec<Option<u32>> = audit.nodes.iter().map(|n| n.key).collect();
        prop_assert_eq!(keys[0], None);
        prop_assert!(keys[1..].windows(2).all(|w| w[0] < w[1]));
        for n in &audit.nodes {
            prop_assert!(n.revisions.iter().all(|(_, v)| v.is_final()));
        }

        let expect: Vec<(u32, u32)> = oracle.into_iter().collect();
        prop_assert_eq!(index.to_vec(), expect.clone());
        prop_assert_eq!(index.scan(&0, &200, index.now()).unwrap(), expect);
        for (snap, state) in &snaps {
            let want: Vec<(u32, u32)> = state.iter().map(|(k, v)| (*k, *v)).collect();
            let first = index.scan_in(&0, &200, snap).unwrap();
            prop_assert_eq!(&first, &want);
            prop_assert!(first.windows(2).all(|w| w[0].0 < w[1].0));
            // Same snapshot after more writes: same answer.
            index.put(7, 7);
            prop_assert_eq!(index.scan_in(&0, &200, snap).unwrap(), first);
            for k in (0..200u32).step_by(17) {
                prop_assert_eq!(index.get_in(&k, snap).unwrap(), state.get(&k).copied());
            }
        }
    }

    #[test]
    fn hash_slots_point_at_their_keys(raw in prop::collection::btree_set(any::<u32>(), 0..600), collide in any::<bool>()) {
        let hasher = if collide { low_hash } else { mvskip::revision::default_key_hash::<u32> };
        let entries: Vec<(u32, u32)> = raw.iter().map(|&k| (k, k ^ 0xa5a5)).collect();
        let e = Entries::build(entries.clone(), hasher).unwrap();
        let n = e.len();
        prop_assert_eq!(e.values().len(), n);
        prop_assert_eq!(e.hashes().len(), n);
        prop_assert_eq!(e.indices().len(), 2 * n);
        prop_assert!(e.keys().windows(2).all(|w| w[0] < w[1]));
        for (i, k) in e.keys().iter().enumerate() {
            let t = usize::from(hasher(k)) % n;
            let slotted = e.indices()[2 * t] as usize == i || e.indices()[2 * t + 1] as usize == i;
            prop_assert!(slotted || e.binary_search(k).is_some());
            prop_assert_eq!(e.lookup(k), Some(&(k ^ 0xa5a5)));
        }
        for probe in [0u32, 1, u32::MAX, 12345] {
            prop_assert_eq!(e.lookup(&probe).is_some(), raw.contains(&probe));
        }
    }

    #[test]
    fn finals_cover_their_optimistic_stamp(n in 1usize..200) {
        let clock = Clock::new();
        let mut last = clock.now();
        for _ in 0..n {
            let opt = clock.optimistic();
            prop_assert!(opt.is_pending());
            let f = clock.choose_final(opt);
            prop_assert!(f.is_final());
            prop_assert!(f.raw() >= opt.magnitude());
            let now = clock.now();
            prop_assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn stats_stay_finite_and_targets_in_range(
        samples in prop::collection::vec((any::<bool>(), 0.0f64..=1.0), 0..300),
        min in 1usize..100,
        span in 0usize..400,
    ) {
        let cfg = AutoscaleConfig { min_size: min, max_size: min + span, ..AutoscaleConfig::default() };
        let (mut r, mut u) = (0.0, 0.0);
        for (read, t) in samples {
            (r, u) = if read { on_read(r, u, t) } else { on_update(r, u, t) };
            prop_assert!(r.is_finite() && u.is_finite() && r >= 0.0 && u >= 0.0);
            let target = cfg.target_size(r, u);
            prop_assert!((min..=min + span).contains(&target));
            prop_assert!(cfg.merge_threshold(target) < cfg.split_threshold(target));
        }
    }

    #[test]
    fn role_counts_sum_to_threads(threads in 3usize..256, which in 0usize..4) {
        let scenario = [Scenario::UpdateOnly, Scenario::UpdateLookup, Scenario::MixedShort, Scenario::MixedLong][which];
        let c = WorkloadConfig { scenario, threads, ..WorkloadConfig::default() };
        let counts = c.role_counts();
        prop_assert_eq!(counts.iter().sum::<usize>(), threads);
        prop_assert_eq!(c.roles().len(), threads);
    }
}
