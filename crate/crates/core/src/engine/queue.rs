use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::time::Ps;

struct Entry<E> {
    time: Ps,
    seq: u64,
    payload: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

/// Pending events ordered by `(time, sequence)`; the sequence number is the
/// scheduling order, so simultaneous events pop first-scheduled-first.
pub struct EventQueue<E> {
    heap: BinaryHeap<Reverse<Entry<E>>>,
    now: Ps,
    next_seq: u64,
    processed: u64,
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
            now: Ps::ZERO,
            next_seq: 0,
            processed: 0,
        }
    }

    pub fn now(&self) -> Ps {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    /// Panics if `at` lies before the current time.
    pub fn schedule(&mut self, at: Ps, payload: E) -> u64 {
        assert!(
            at >= self.now,
            "causality violation: event scheduled at {at} while clock is at {}",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry { time: at, seq, payload }));
        seq
    }

    pub fn schedule_in(&mut self, delay: Ps, payload: E) -> u64 {
        self.schedule(self.now + delay, payload)
    }

    /// Removes the earliest event and advances the clock to its time.
    pub fn pop(&mut self) -> Option<(Ps, E)> {
        let Reverse(entry) = self.heap.pop()?;
        debug_assert!(entry.time >= self.now);
        self.now = entry.time;
        self.processed += 1;
        Some((entry.time, entry.payload))
    }
}
