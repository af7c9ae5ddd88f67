//! Deterministic event queue: the heart of the simulation.
//!
//! Events are ordered by `(time, sequence)`. The sequence number is a monotone
//! insertion counter, so simultaneous events fire in FIFO order and runs never
//! depend on float tie-breaking.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::packet::{FlowId, Packet};
use crate::topology::{LinkId, Place};

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// A packet finished propagating and arrives at a node.
    PacketArrival { place: Place, pkt: Packet },
    /// The packet occupying a link's transmitter has been fully serialized.
    TransmissionComplete { link: LinkId },
    /// A TCP retransmission timer fired.
    TimerExpiry { flow: FlowId },
    /// A traffic source wants to emit (TCP initial send, UDP CBR tick).
    SourceWakeup { flow: FlowId },
    /// Periodic discipline maintenance (SFB hash rotation).
    DisciplineTick,
}

#[derive(Debug, Clone)]
pub struct SimEvent {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

/// Handle returned by [`EventQueue::schedule`], usable to cancel timers.
pub type EventHandle = u64;

struct Entry {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// BinaryHeap is a max-heap; reverse so the earliest (time, seq) pops first.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .partial_cmp(&self.time)
            .expect("event times are finite")
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Default)]
pub struct EventQueue {
    heap: BinaryHeap<Entry>,
    cancelled: HashSet<u64>,
    clock: f64,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
            clock: 0.0,
            next_seq: 0,
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Schedules `kind` at absolute time `time`. Scheduling in the past is a
    /// programming error and panics.
    pub fn schedule(&mut self, time: f64, kind: EventKind) -> EventHandle {
        assert!(time.is_finite(), "event time must be finite, got {time}");
        assert!(
            time >= self.clock,
            "cannot schedule event at t={time} before clock t={}",
            self.clock
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { time, seq, kind });
        seq
    }

    /// Cancels a pending event. Cancelling an event that already fired is the
    /// caller's bug; handles must be cleared when their event is delivered.
    pub fn cancel(&mut self, handle: EventHandle) {
        debug_assert!(handle < self.next_seq, "cancel of unknown handle");
        self.cancelled.insert(handle);
    }

    /// Pops the next event with `time <= t_end`, advancing the clock to it.
    /// Returns `None` once no such event remains; the clock is left untouched
    /// in that case (callers advance it with [`EventQueue::finish_at`]).
    pub fn pop_until(&mut self, t_end: f64) -> Option<SimEvent> {
        loop {
            let head_time = self.heap.peek()?.time;
            if head_time > t_end {
                return None;
            }
            let e = self.heap.pop().expect("peeked entry");
            if self.cancelled.remove(&e.seq) {
                continue;
            }
            debug_assert!(e.time >= self.clock, "clock monotonicity violated");
            self.clock = e.time;
            return Some(SimEvent {
                time: e.time,
                seq: e.seq,
                kind: e.kind,
            });
        }
    }

    /// Advances the clock to `t_end` after draining events up to it.
    pub fn finish_at(&mut self, t_end: f64) {
        assert!(t_end >= self.clock);
        self.clock = t_end;
    }

    /// All pending (non-cancelled) events, in unspecified order.
    pub fn pending(&self) -> impl Iterator<Item = (&f64, &EventKind)> {
        self.heap
            .iter()
            .filter(|e| !self.cancelled.contains(&e.seq))
            .map(|e| (&e.time, &e.kind))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn timer(flow: FlowId) -> EventKind {
        EventKind::TimerExpiry { flow }
    }

    #[test]
    fn fires_at_scheduled_time() {
        let mut q = EventQueue::new();
        q.schedule(0.5, timer(0));
        let e = q.pop_until(10.0).unwrap();
        assert_eq!(e.time, 0.5);
        assert_eq!(q.clock(), 0.5);
    }

    #[test]
    fn simultaneous_events_fifo_by_insertion() {
        let mut q = EventQueue::new();
        let h7 = q.schedule(1.0, timer(7));
        let h8 = q.schedule(1.0, timer(8));
        assert!(h7 < h8);
        assert_eq!(q.pop_until(2.0).unwrap().kind, timer(7));
        assert_eq!(q.pop_until(2.0).unwrap().kind, timer(8));
    }

    #[test]
    #[should_panic(expected = "before clock")]
    fn scheduling_in_the_past_panics() {
        let mut q = EventQueue::new();
        q.schedule(5.0, timer(0));
        q.pop_until(10.0);
        q.schedule(4.0, timer(1));
    }

    #[test]
    fn empty_run_advances_clock_only() {
        let mut q = EventQueue::new();
        assert!(q.pop_until(10.0).is_none());
        q.finish_at(10.0);
        assert_eq!(q.clock(), 10.0);
    }

    #[test]
    fn pop_until_respects_bound() {
        let mut q = EventQueue::new();
        q.schedule(1.0, timer(1));
        q.schedule(2.0, timer(2));
        q.schedule(3.0, timer(3));
        let mut n = 0;
        while q.pop_until(2.5).is_some() {
            n += 1;
        }
        assert_eq!(n, 2);
        q.finish_at(2.5);
        assert_eq!(q.clock(), 2.5);
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn cancelled_events_do_not_fire() {
        let mut q = EventQueue::new();
        let h = q.schedule(1.0, timer(1));
        q.schedule(2.0, timer(2));
        q.cancel(h);
        let e = q.pop_until(10.0).unwrap();
        assert_eq!(e.kind, timer(2));
        assert!(q.pop_until(10.0).is_none());
    }

    #[test]
    fn processed_times_nondecreasing() {
        let mut q = EventQueue::new();
        for i in 0..50 {
            q.schedule((i * 7 % 13) as f64, timer(i));
        }
        let mut last = f64::NEG_INFINITY;
        while let Some(e) = q.pop_until(100.0) {
            assert!(e.time >= last);
            last = e.time;
        }
    }
}
