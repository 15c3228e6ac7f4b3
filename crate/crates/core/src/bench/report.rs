use std::io::Write;

use hdrhistogram::Histogram;
use serde::{Deserialize, Serialize};

use super::config::{Role, Stop, WorkloadConfig};

/// Latency percentiles in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Latency {
    pub mean_ns: f64,
    pub p50_ns: u64,
    pub p90_ns: u64,
    pub p99_ns: u64,
    pub p999_ns: u64,
    pub max_ns: u64,
}

impl Latency {
    pub fn from_histogram(h: &Histogram<u64>) -> Self {
        if h.is_empty() {
            return Latency::default();
        }
        Latency {
            mean_ns: h.mean(),
            p50_ns: h.value_at_quantile(0.5),
            p90_ns: h.value_at_quantile(0.9),
            p99_ns: h.value_at_quantile(0.99),
            p999_ns: h.value_at_quantile(0.999),
            max_ns: h.max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleReport {
    pub role: Role,
    pub threads: usize,
    /// Calls made: one per put, remove, get, batch or scan.
    pub operations: u64,
    /// Single-key operations: a batch of n counts n, a scan counts the
    /// entries it returned.
    pub basic_ops: u64,
    /// Basic operations per second.
    pub throughput: f64,
    pub latency: Latency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalReport {
    pub threads: usize,
    pub operations: u64,
    pub basic_ops: u64,
    pub throughput: f64,
    pub latency: Latency,
}

/// Number of nodes whose newest revision holds at most `upto` entries (and
/// more than the previous bucket's bound).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeBucket {
    pub upto: usize,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub nodes: usize,
    pub entries: usize,
    pub median_revision_size: usize,
    pub max_list_len: usize,
    pub revision_sizes: Vec<SizeBucket>,
}

impl StructureReport {
    /// From the entry counts of every node's newest revision.
    pub fn from_sizes(mut sizes: Vec<usize>, max_list_len: usize) -> Self {
        sizes.sort_unstable();
        let median = if sizes.is_empty() {
            0
        } else {
            sizes[sizes.len() / 2]
        };
        let mut buckets: Vec<SizeBucket> = Vec::new();
        let mut upto = 0;
        let mut i = 0;
        while i < sizes.len() {
            let start = i;
            while i < sizes.len() && sizes[i] <= upto {
                i += 1;
            }
            buckets.push(SizeBucket {
                upto,
                nodes: i - start,
            });
            upto = if upto == 0 { 1 } else { upto * 2 };
        }
        StructureReport {
            nodes: sizes.len(),
            entries: sizes.iter().sum(),
            median_revision_size: median,
            max_list_len,
            revision_sizes: buckets,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: WorkloadConfig,
    /// Measured wall time in seconds, warm-up excluded.
    pub seconds: f64,
    pub roles: Vec<RoleReport>,
    pub total: TotalReport,
    pub structure: Option<StructureReport>,
}

/// CSV column order. One row per role, then a `total` row.
pub const CSV_HEADER: &str = "index,scenario,threads,batch_mode,batch_order,key_dist,key_bytes,value_bytes,\
dataset_entries,seed,seconds,role,role_threads,operations,basic_ops,ops_per_sec,mean_ns,p50_ns,p90_ns,\
p99_ns,p999_ns,max_ns,nodes,median_revision_size,max_list_len";

#[derive(Serialize)]
struct CsvRow<'a> {
    index: &'a str,
    scenario: &'a str,
    threads: usize,
    batch_mode: &'a str,
    batch_order: &'a str,
    key_dist: String,
    key_bytes: usize,
    value_bytes: usize,
    dataset_entries: u64,
    seed: u64,
    seconds: f64,
    role: &'a str,
    role_threads: usize,
    operations: u64,
    basic_ops: u64,
    ops_per_sec: f64,
    mean_ns: f64,
    p50_ns: u64,
    p90_ns: u64,
    p99_ns: u64,
    p999_ns: u64,
    max_ns: u64,
    nodes: Option<usize>,
    median_revision_size: Option<usize>,
    max_list_len: Option<usize>,
}

impl BenchReport {
    fn rows(&self) -> Vec<CsvRow<'_>> {
        let c = &self.config;
        let (key_bytes, value_bytes) = c.entry_size.bytes();
        let s = self.structure.as_ref();
        let row =
            |role: &'static str, threads, operations, basic_ops, ops_per_sec, l: &Latency| CsvRow {
                index: c.index.name(),
                scenario: c.scenario.name(),
                threads: c.threads,
                batch_mode: c.batch_mode.name(),
                batch_order: c.batch_order.name(),
                key_dist: c.key_dist.name(),
                key_bytes,
                value_bytes,
                dataset_entries: c.dataset_entries,
                seed: c.seed,
                seconds: self.seconds,
                role,
                role_threads: threads,
                operations,
                basic_ops,
                ops_per_sec,
                mean_ns: l.mean_ns,
                p50_ns: l.p50_ns,
                p90_ns: l.p90_ns,
                p99_ns: l.p99_ns,
                p999_ns: l.p999_ns,
                max_ns: l.max_ns,
                nodes: s.map(|s| s.nodes),
                median_revision_size: s.map(|s| s.median_revision_size),
                max_list_len: s.map(|s| s.max_list_len),
            };
        let mut rows: Vec<CsvRow<'_>> = self
            .roles
            .iter()
            .map(|r| {
                row(
                    r.role.name(),
                    r.threads,
                    r.operations,
                    r.basic_ops,
                    r.throughput,
                    &r.latency,
                )
            })
            .collect();
        let t = &self.total;
        rows.push(row(
            "total",
            t.threads,
            t.operations,
            t.basic_ops,
            t.throughput,
            &t.latency,
        ));
        rows
    }

    /// True when the total row equals the sum of the role rows.
    pub fn totals_conserved(&self) -> bool {
        let ops: u64 = self.roles.iter().map(|r| r.operations).sum();
        let basic: u64 = self.roles.iter().map(|r| r.basic_ops).sum();
        let threads: usize = self.roles.iter().map(|r| r.threads).sum();
        ops == self.total.operations
            && basic == self.total.basic_ops
            && threads == self.total.threads
    }

    /// Whether the run was bounded by operation count, which makes counts
    /// reproducible.
    pub fn is_counted(&self) -> bool {
        matches!(self.config.stop, Stop::Ops(_))
    }
}

/// Write reports as CSV with the [`CSV_HEADER`] columns.
pub fn write_csv<W: Write>(reports: &[BenchReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        for row in r.rows() {
            w.serialize(row)?;
        }
    }
    if reports.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

/// Write reports as a pretty-printed JSON array.
pub fn write_json<W: Write>(reports: &[BenchReport], out: W) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(out, reports)
}
