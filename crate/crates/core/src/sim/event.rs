//! Deterministic event queue and simulated clock.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SimError;

/// Simulated time in seconds.
pub type SimTime = f64;

/// Monotone simulated clock.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimClock {
    now: SimTime,
}

impl SimClock {
    pub fn now(&self) -> SimTime {
        self.now
    }

    fn advance_to(&mut self, t: SimTime) {
        debug_assert!(t >= self.now, "clock moved backwards: {} -> {}", self.now, t);
        self.now = t;
    }
}

struct Entry<E> {
    at: SimTime,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // Reversed so the max-heap pops the earliest (time, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .at
            .total_cmp(&self.at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Priority queue of timestamped events, popped in `(time, insertion order)`
/// order. Ties at equal timestamps resolve by insertion sequence, so a run is
/// fully determined by the order in which events were scheduled.
pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    next_seq: u64,
    clock: SimClock,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            clock: SimClock::default(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.clock.now()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `event` to fire at `at`. Scheduling in the past is a
    /// causality bug and is rejected.
    pub fn schedule(&mut self, event: E, at: SimTime) -> Result<(), SimError> {
        let now = self.clock.now();
        if !(at >= now) {
            return Err(SimError::Causality { at, now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { at, seq, event });
        Ok(())
    }

    /// Timestamp of the next event without removing it.
    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.at)
    }

    /// Removes the next event and advances the clock to its timestamp.
    pub fn pop(&mut self) -> Option<(SimTime, E)> {
        let entry = self.heap.pop()?;
        self.clock.advance_to(entry.at);
        Some((entry.at, entry.event))
    }

    /// Pending events in no particular order.
    pub fn pending(&self) -> impl Iterator<Item = (SimTime, &E)> {
        self.heap.iter().map(|e| (e.at, &e.event))
    }

    /// Moves the clock forward without an event, e.g. to a horizon.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.clock.now() {
            self.clock.advance_to(t);
        }
    }
}
