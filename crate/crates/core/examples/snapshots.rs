//! Concurrent writers with a reader that scans a stable snapshot.

use std::sync::Arc;
use std::thread;

use mvskip::{Batch, SkipIndex};

fn main() {
    let index = Arc::new(SkipIndex::new());
    for k in 0..1_000u32 {
        index.put(k, 0u64);
    }

    let snap = index.register();
    let writers: Vec<_> = (1..=4u64)
        .map(|w| {
            let index = index.clone();
            thread::spawn(move || {
                for k in (0..1_000u32).filter(|k| u64::from(*k) % 4 == w - 1) {
                    let mut batch = Batch::new();
                    batch.put(k, w).remove(k + 1_000);
                    index.batch(batch).unwrap();
                }
            })
        })
        .collect();

    // Whatever the writers do, the snapshot keeps its contents.
    let total: u64 = index
        .scan_in(&0, &1_000, &snap)
        .unwrap()
        .iter()
        .map(|(_, v)| v)
        .sum();
    assert_eq!(total, 0);
    for w in writers {
        w.join().unwrap();
    }

    let latest: u64 = index
        .scan(&0, &1_000, index.now())
        .unwrap()
        .iter()
        .map(|(_, v)| v)
        .sum();
    println!("sum in snapshot: {total}, sum now: {latest}");
    println!("nodes: {}", index.audit().nodes.len());
}
