//! Recording concurrent histories over a small key space.

use std::sync::atomic::{AtomicU64, Ordering};

pub type Key = u8;
pub type Val = u32;

/// An invoked operation. Snapshot ids are unique within a history.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Call {
    Put(Key, Val),
    Remove(Key),
    /// `None` removes the key.
    Batch(Vec<(Key, Option<Val>)>),
    Get(Key),
    /// Take snapshot `id`.
    Snapshot(u32),
    GetAt(u32, Key),
    /// Entries in `[from, to)` at snapshot `id`.
    ScanAt(u32, Key, Key),
    /// Entries in `[from, to)` of the latest state.
    Scan(Key, Key),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Reply {
    Done,
    Value(Option<Val>),
    Entries(Vec<(Key, Val)>),
}

/// One completed operation with its real-time interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub thread: usize,
    pub call: Call,
    pub reply: Reply,
    pub invoke: u64,
    pub response: u64,
}

#[derive(Debug, Clone, Default)]
pub struct History {
    pub events: Vec<Event>,
}

impl History {
    pub fn new(mut events: Vec<Event>) -> Self {
        events.sort_by_key(|e| e.invoke);
        History { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn threads(&self) -> usize {
        self.events.iter().map(|e| e.thread + 1).max().unwrap_or(0)
    }
}

/// Hands out the global order stamps that bound each operation.
#[derive(Debug, Default)]
pub struct Recorder {
    ticks: AtomicU64,
}

impl Recorder {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    fn tick(&self) -> u64 {
        self.ticks.fetch_add(1, Ordering::SeqCst)
    }

    pub fn log(&self, thread: usize) -> ThreadLog<'_> {
        ThreadLog {
            recorder: self,
            thread,
            events: Vec::new(),
        }
    }
}

/// Sequential event log of one thread.
pub struct ThreadLog<'r> {
    recorder: &'r Recorder,
    thread: usize,
    events: Vec<Event>,
}

impl ThreadLog<'_> {
    pub fn record(&mut self, call: Call, run: impl FnOnce() -> Reply) -> &Reply {
        let invoke = self.recorder.tick();
        let reply = run();
        let response = self.recorder.tick();
        self.events.push(Event {
            thread: self.thread,
            call,
            reply,
            invoke,
            response,
        });
        &self.events.last().expect("just pushed").reply
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }
}
