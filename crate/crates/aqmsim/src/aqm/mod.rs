//! The six queue disciplines behind one interface.
//!
//! A discipline decides accept/drop for every arriving packet, observes
//! departures (the moment a packet leaves the queue for the transmitter), and
//! optionally observes link-idle events. All six serve packets FIFO; they
//! differ only in the drop decision.

use std::collections::VecDeque;

use crate::packet::Packet;
use crate::rng::SimRng;

pub mod blue;
pub mod choke;
pub mod droptail;
pub mod fred;
pub mod red;
pub mod sfb;

pub use blue::{BlueParams, BlueQueue};
pub use choke::{ChokeQueue, ChokeVariant};
pub use droptail::DropTailQueue;
pub use fred::{FredParams, FredQueue};
pub use red::{RedCore, RedParams, RedQueue};
pub use sfb::{sfb_hash, SfbParams, SfbQueue};

/// Why a packet was dropped. Reported per run in the drop accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropReason {
    /// The buffer was physically full.
    Overflow,
    /// Early drop by the discipline's probabilistic machinery.
    Probabilistic,
    /// Removed by CHOKe flow-id matching (arrival or drawn victim).
    Matched,
    /// Refused by SFB's non-responsive rate limiter.
    RateLimited,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Accepted,
    Dropped(DropReason),
}

/// Result of an enqueue decision. `victims` holds packets CHOKe removed from
/// the queue as a side effect; it is empty for every other discipline.
#[derive(Debug)]
pub struct EnqueueOutcome {
    pub verdict: Verdict,
    pub victims: Vec<Packet>,
}

impl EnqueueOutcome {
    pub fn accepted() -> Self {
        EnqueueOutcome {
            verdict: Verdict::Accepted,
            victims: Vec::new(),
        }
    }

    pub fn dropped(reason: DropReason) -> Self {
        EnqueueOutcome {
            verdict: Verdict::Dropped(reason),
            victims: Vec::new(),
        }
    }

    pub fn was_accepted(&self) -> bool {
        self.verdict == Verdict::Accepted
    }
}

/// Bounded FIFO packet store shared by all disciplines. The capacity bound is
/// enforced here so no discipline can overfill the buffer regardless of what
/// its drop logic decided.
#[derive(Debug, Clone)]
pub struct Fifo {
    q: VecDeque<Packet>,
    cap: usize,
}

impl Fifo {
    pub fn new(cap: usize) -> Self {
        assert!(cap > 0, "buffer capacity must be positive");
        Fifo {
            q: VecDeque::new(),
            cap,
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.q.len() >= self.cap
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn push(&mut self, mut pkt: Packet, clock: f64) {
        assert!(!self.is_full(), "push into full buffer");
        pkt.enqueue_time = Some(clock);
        self.q.push_back(pkt);
    }

    pub fn pop_front(&mut self) -> Option<Packet> {
        self.q.pop_front()
    }

    pub fn get(&self, idx: usize) -> Option<&Packet> {
        self.q.get(idx)
    }

    /// Removes the packet at `idx`, preserving the order of the rest.
    pub fn remove(&mut self, idx: usize) -> Option<Packet> {
        self.q.remove(idx)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.q.iter()
    }
}

/// The pluggable AQM interface.
pub trait QueueDiscipline {
    /// Decides accept/drop for an arriving packet. Accepted packets are stored
    /// FIFO. Probabilistic decisions draw from the run's RNG.
    fn enqueue(&mut self, pkt: Packet, clock: f64, rng: &mut SimRng) -> EnqueueOutcome;

    /// Removes and returns the head packet, updating departure-side state.
    fn dequeue(&mut self, clock: f64) -> Option<Packet>;

    /// Called when the link looks for work and finds the queue empty.
    fn on_idle(&mut self, _clock: f64) {}

    /// Periodic maintenance, scheduled every [`QueueDiscipline::tick_interval`].
    fn on_tick(&mut self, _clock: f64, _rng: &mut SimRng) {}

    fn tick_interval(&self) -> Option<f64> {
        None
    }

    fn fifo(&self) -> &Fifo;

    fn len(&self) -> usize {
        self.fifo().len()
    }

    fn is_empty(&self) -> bool {
        self.fifo().is_empty()
    }

    fn capacity(&self) -> usize {
        self.fifo().cap()
    }

    fn name(&self) -> &'static str;
}
