//! Discrete-event core: simulation clock, cancellable event queue and
//! named deterministic random streams.
//!
//! Events are ordered by `(time, seq)` where `seq` is a per-queue insertion
//! counter, so events scheduled for the same instant fire in FIFO order.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::ops::{Add, Sub};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Simulation time with microsecond resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000)
    }

    /// Rounds to the nearest microsecond. Negative and NaN inputs clamp to zero.
    pub fn from_secs_f64(s: f64) -> Self {
        if s.is_nan() || s <= 0.0 {
            return SimTime::ZERO;
        }
        SimTime((s * 1e6).round() as u64)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / 1_000_000, self.0 % 1_000_000)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("event scheduled in the past: at {at}, clock is {now}")]
    InPast { at: SimTime, now: SimTime },
}

/// Opaque handle returned by [`EventQueue::schedule`]; used to cancel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

impl EventHandle {
    #[cfg(test)]
    pub(crate) fn for_tests(n: u64) -> Self {
        EventHandle(n)
    }
}

#[derive(Debug)]
struct Scheduled<E> {
    time: SimTime,
    seq: u64,
    payload: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    // Reversed so the max-heap pops the earliest (time, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Priority queue of pending events plus the simulation clock.
#[derive(Debug)]
pub struct EventQueue<E> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Scheduled<E>>,
    live: HashSet<u64>,
    dispatched: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            now: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
            live: HashSet::new(),
            dispatched: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of events still pending (cancelled ones excluded).
    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    /// Total events dispatched over the queue's lifetime.
    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    pub fn schedule(&mut self, at: SimTime, payload: E) -> Result<EventHandle, EngineError> {
        if at < self.now {
            return Err(EngineError::InPast { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Scheduled { time: at, seq, payload });
        self.live.insert(seq);
        Ok(EventHandle(seq))
    }

    /// Schedules `payload` at `now + delay`; cannot fail.
    pub fn schedule_in(&mut self, delay: SimTime, payload: E) -> EventHandle {
        let at = self.now + delay;
        self.schedule(at, payload)
            .expect("now + delay is never in the past")
    }

    /// Returns true iff the event was still pending and is now removed.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.live.remove(&handle.0)
    }

    /// Pops the next live event with `time <= horizon`, advancing the clock.
    pub fn pop_until(&mut self, horizon: SimTime) -> Option<(SimTime, E)> {
        loop {
            let head = self.heap.peek()?;
            if head.time > horizon {
                return None;
            }
            let ev = self.heap.pop().expect("peeked");
            if !self.live.remove(&ev.seq) {
                continue;
            }
            debug_assert!(ev.time >= self.now, "clock went backwards");
            self.now = ev.time;
            self.dispatched += 1;
            return Some((ev.time, ev.payload));
        }
    }

    /// Dispatches every event with `time <= horizon` through `handler`, then
    /// leaves the clock at `horizon`. Returns the number dispatched.
    pub fn run_until<F>(&mut self, horizon: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Self, SimTime, E),
    {
        let mut count = 0;
        while let Some((t, ev)) = self.pop_until(horizon) {
            handler(self, t, ev);
            count += 1;
        }
        self.advance_to(horizon);
        count
    }

    /// Moves the clock forward without dispatching. No-op if `t` is not later.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }

    /// Pending (non-cancelled) events, in no particular order.
    pub fn pending(&self) -> impl Iterator<Item = (SimTime, &E)> {
        self.heap
            .iter()
            .filter(|s| self.live.contains(&s.seq))
            .map(|s| (s.time, &s.payload))
    }
}

/// Purpose label of a random stream. Streams are independent so that, for
/// instance, enabling the reputation layer never perturbs mobility draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamId {
    Mobility(u32),
    Traffic,
    Selfishness,
    Behavior(u32),
    Jitter(u32),
}

impl StreamId {
    fn code(self) -> u64 {
        match self {
            StreamId::Mobility(n) => 0x1000_0000 | n as u64,
            StreamId::Traffic => 0x2000_0000,
            StreamId::Selfishness => 0x3000_0000,
            StreamId::Behavior(n) => 0x4000_0000 | n as u64,
            StreamId::Jitter(n) => 0x5000_0000 | n as u64,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha8 stream keyed by `(seed, stream)`; identical on every platform.
pub fn rng_stream(seed: u64, stream: StreamId) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(seed) ^ splitmix64(stream.code()));
    ChaCha8Rng::seed_from_u64(key)
}
