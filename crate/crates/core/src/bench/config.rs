use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Thread mix of a run. Every thread issues only one kind of operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    UpdateOnly,
    UpdateLookup,
    MixedShort,
    MixedLong,
}

impl Scenario {
    /// Fractions of threads per role: updaters, readers, scanners.
    pub fn fractions(self) -> [f64; 3] {
        match self {
            Scenario::UpdateOnly => [1.0, 0.0, 0.0],
            Scenario::UpdateLookup => [0.25, 0.75, 0.0],
            Scenario::MixedShort | Scenario::MixedLong => [0.25, 0.5, 0.25],
        }
    }

    /// Entries covered by one range scan.
    pub fn scan_len(self) -> usize {
        match self {
            Scenario::MixedLong => 10_000,
            _ => 100,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::UpdateOnly => "update-only",
            Scenario::UpdateLookup => "update-lookup",
            Scenario::MixedShort => "mixed-short",
            Scenario::MixedLong => "mixed-long",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Updater,
    Reader,
    Scanner,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Updater, Role::Reader, Role::Scanner];

    pub fn name(self) -> &'static str {
        match self {
            Role::Updater => "updater",
            Role::Reader => "reader",
            Role::Scanner => "scanner",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BatchMode {
    Single,
    Batch10,
    Batch100,
}

impl BatchMode {
    pub fn size(self) -> usize {
        match self {
            BatchMode::Single => 1,
            BatchMode::Batch10 => 10,
            BatchMode::Batch100 => 100,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BatchMode::Single => "single",
            BatchMode::Batch10 => "batch10",
            BatchMode::Batch100 => "batch100",
        }
    }
}

/// Key choice inside a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BatchOrder {
    /// Consecutive keys from a drawn start key.
    Sequential,
    /// Distinct keys drawn independently.
    Random,
}

impl BatchOrder {
    pub fn name(self) -> &'static str {
        match self {
            BatchOrder::Sequential => "sequential",
            BatchOrder::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "skew")]
pub enum KeyDist {
    Uniform,
    Zipfian(f64),
}

impl KeyDist {
    pub fn name(self) -> String {
        match self {
            KeyDist::Uniform => "uniform".to_string(),
            KeyDist::Zipfian(s) => format!("zipfian-{s}"),
        }
    }
}

/// Key and value widths in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EntrySize {
    /// 4-byte keys, 4-byte values.
    Small,
    /// 16-byte keys, 100-byte values.
    Large,
}

impl EntrySize {
    pub fn bytes(self) -> (usize, usize) {
        match self {
            EntrySize::Small => (4, 4),
            EntrySize::Large => (16, 100),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    Mvskip,
    LockedBtree,
}

impl IndexKind {
    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Mvskip => "mvskip",
            IndexKind::LockedBtree => "locked-btree",
        }
    }
}

/// When workers stop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stop {
    /// Run for a fixed time after a warm-up that is not measured.
    Timed {
        warmup: Duration,
        duration: Duration,
    },
    /// Every thread issues exactly this many operations. Counts are then
    /// reproducible for a given seed.
    Ops(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub scenario: Scenario,
    pub threads: usize,
    pub batch_mode: BatchMode,
    pub batch_order: BatchOrder,
    pub key_dist: KeyDist,
    pub entry_size: EntrySize,
    pub index: IndexKind,
    /// Size of the key universe. Half of it is present at start.
    pub dataset_entries: u64,
    pub stop: Stop,
    pub seed: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            scenario: Scenario::UpdateOnly,
            threads: 1,
            batch_mode: BatchMode::Single,
            batch_order: BatchOrder::Random,
            key_dist: KeyDist::Uniform,
            entry_size: EntrySize::Small,
            index: IndexKind::Mvskip,
            dataset_entries: 100_000,
            stop: Stop::Timed {
                warmup: Duration::from_secs(2),
                duration: Duration::from_secs(10),
            },
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("at least one thread is required")]
    NoThreads,
    #[error("the scenario needs one thread per role, got {0} threads")]
    TooFewThreads(usize),
    #[error("dataset must hold at least {min} keys, got {got}")]
    DatasetTooSmall { min: u64, got: u64 },
    #[error("zipfian skew must be positive and finite, got {0}")]
    BadSkew(f64),
    #[error("measured duration must be positive")]
    ZeroDuration,
    #[error("operation count must be positive")]
    ZeroOps,
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.threads == 0 {
            return Err(ConfigError::NoThreads);
        }
        let needed = self
            .scenario
            .fractions()
            .iter()
            .filter(|f| **f > 0.0)
            .count();
        if self.threads < needed {
            return Err(ConfigError::TooFewThreads(self.threads));
        }
        let min = (2 * self.batch_mode.size()).max(16) as u64;
        if self.dataset_entries < min {
            return Err(ConfigError::DatasetTooSmall {
                min,
                got: self.dataset_entries,
            });
        }
        if let KeyDist::Zipfian(s) = self.key_dist {
            if !(s.is_finite() && s > 0.0) {
                return Err(ConfigError::BadSkew(s));
            }
        }
        match self.stop {
            Stop::Timed { duration, .. } if duration.is_zero() => Err(ConfigError::ZeroDuration),
            Stop::Ops(0) => Err(ConfigError::ZeroOps),
            _ => Ok(()),
        }
    }

    /// Threads per role, in [`Role::ALL`] order. Rounds to the nearest
    /// count and gives every role with a nonzero share at least one thread.
    pub fn role_counts(&self) -> [usize; 3] {
        let fr = self.scenario.fractions();
        let n = self.threads;
        let mut counts = fr.map(|f| {
            if f > 0.0 {
                ((f * n as f64).round() as usize).max(1)
            } else {
                0
            }
        });
        // Readers absorb the rounding error; update-only has only updaters.
        let idx = if fr[1] > 0.0 { 1 } else { 0 };
        let others: usize = counts
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, c)| c)
            .sum();
        counts[idx] = n.saturating_sub(others).max(1);
        counts
    }

    /// Role of every worker thread.
    pub fn roles(&self) -> Vec<Role> {
        Role::ALL
            .iter()
            .zip(self.role_counts())
            .flat_map(|(r, c)| std::iter::repeat_n(*r, c))
            .collect()
    }
}
