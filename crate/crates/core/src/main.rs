use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mvskip::bench::{
    self, BatchMode, BatchOrder, EntrySize, IndexKind, KeyDist, Scenario, Stop, WorkloadConfig,
};
use mvskip::harness::workload::{
    linearizability_stress, run_differential, DiffOptions, LinOptions,
};

#[derive(Parser)]
#[command(
    name = "mvskip",
    version,
    about = "Benchmarks and correctness checks for the mvskip index"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a microbenchmark and emit CSV or JSON.
    Bench(BenchArgs),
    /// Record concurrent histories and check them for linearizability.
    Check(CheckArgs),
    /// Compare random single-threaded scripts against a reference model.
    Diff(DiffArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Zipfian,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "update-only")]
    scenario: Scenario,
    /// Thread counts; several values run one benchmark each.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    threads: Vec<usize>,
    #[arg(long, value_enum, default_value = "single")]
    batch_mode: BatchMode,
    #[arg(long, value_enum, default_value = "random")]
    batch_order: BatchOrder,
    #[arg(long, value_enum, default_value = "uniform")]
    key_dist: Dist,
    /// Zipfian skew.
    #[arg(long, default_value_t = 0.99)]
    skew: f64,
    /// small = 4-byte keys and values, large = 16-byte keys, 100-byte values.
    #[arg(long, value_enum, default_value = "small")]
    entry_size: EntrySize,
    #[arg(long, value_enum, default_value = "mvskip")]
    index: IndexKind,
    /// Key universe; half of it is loaded before the run.
    #[arg(long, default_value_t = 100_000)]
    dataset: u64,
    /// Measured seconds.
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    /// Unmeasured seconds before measuring.
    #[arg(long, default_value_t = 2.0)]
    warmup: f64,
    /// Stop after this many operations per thread instead of after a time.
    #[arg(long)]
    ops: Option<u64>,
    #[arg(long, env = "MVSKIP_SEED", default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Number of runs.
    #[arg(long, default_value_t = 100)]
    runs: u64,
    /// First seed; run i uses seed + i.
    #[arg(long, env = "MVSKIP_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    threads: usize,
    /// Operations per thread.
    #[arg(long, default_value_t = 200)]
    ops: usize,
    /// State expansions allowed per history.
    #[arg(long, default_value_t = 2_000_000)]
    budget: usize,
    /// Fixed revision size used by the index under test.
    #[arg(long, default_value_t = 2)]
    node_size: usize,
}

#[derive(Args)]
struct DiffArgs {
    #[arg(long, default_value_t = 100)]
    runs: u64,
    #[arg(long, env = "MVSKIP_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    ops: usize,
    #[arg(long, default_value_t = 4_000)]
    keys: u32,
    /// Fixed revision size; adaptive when absent.
    #[arg(long)]
    node_size: Option<usize>,
}

fn secs(s: f64) -> Result<Duration, String> {
    Duration::try_from_secs_f64(s).map_err(|e| format!("bad duration {s}: {e}"))
}

fn bench(args: BenchArgs) -> Result<(), String> {
    let stop = match args.ops {
        Some(n) => Stop::Ops(n),
        None => Stop::Timed {
            warmup: secs(args.warmup)?,
            duration: secs(args.duration)?,
        },
    };
    let mut reports = Vec::new();
    for &threads in &args.threads {
        let config = WorkloadConfig {
            scenario: args.scenario,
            threads,
            batch_mode: args.batch_mode,
            batch_order: args.batch_order,
            key_dist: match args.key_dist {
                Dist::Uniform => KeyDist::Uniform,
                Dist::Zipfian => KeyDist::Zipfian(args.skew),
            },
            entry_size: args.entry_size,
            index: args.index,
            dataset_entries: args.dataset,
            stop,
            seed: args.seed,
        };
        let report = bench::run(&config).map_err(|e| e.to_string())?;
        eprintln!(
            "{} {} threads={}: {:.0} ops/s",
            config.index.name(),
            config.scenario.name(),
            threads,
            report.total.throughput
        );
        reports.push(report);
    }
    let out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(File::create(p).map_err(|e| format!("{}: {e}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let out = BufWriter::new(out);
    match args.format {
        Format::Csv => bench::write_csv(&reports, out).map_err(|e| e.to_string()),
        Format::Json => bench::write_json(&reports, out).map_err(|e| e.to_string()),
    }
}

fn check(args: CheckArgs) -> Result<(), String> {
    let opts = LinOptions {
        threads: args.threads,
        ops_per_thread: args.ops,
        node_size: args.node_size,
        ..LinOptions::default()
    };
    let s = linearizability_stress(args.seed..args.seed + args.runs, &opts, args.budget);
    println!(
        "runs={} events={} violations={} inconclusive={}",
        s.runs,
        s.events,
        s.violations.len(),
        s.inconclusive
    );
    match s.violations.first() {
        Some((seed, msg)) => Err(format!("seed {seed}: {msg}")),
        None => Ok(()),
    }
}

fn diff(args: DiffArgs) -> Result<(), String> {
    let opts = DiffOptions {
        ops: args.ops,
        key_space: args.keys,
        node_size: args.node_size,
    };
    for seed in args.seed..args.seed + args.runs {
        run_differential(seed, &opts)?;
    }
    println!("runs={} ops={} mismatches=0", args.runs, args.ops);
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Bench(a) => bench(a),
        Command::Check(a) => check(a),
        Command::Diff(a) => diff(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
