//! BLUE: drop probability driven by loss and link-idle history instead of
//! queue occupancy. A single `pm` rises by `d1` on buffer overflow and falls
//! by `d2` when the link goes idle, with updates rate-limited by
//! `freeze_time`.

use super::{DropReason, EnqueueOutcome, Fifo, QueueDiscipline};
use crate::packet::Packet;
use crate::rng::SimRng;

#[derive(Debug, Clone)]
pub struct BlueParams {
    pub d1: f64,
    pub d2: f64,
    pub freeze_time: f64,
}

impl Default for BlueParams {
    fn default() -> Self {
        BlueParams {
            d1: 0.02,
            d2: 0.002,
            freeze_time: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlueQueue {
    params: BlueParams,
    pm: f64,
    last_update: f64,
    fifo: Fifo,
}

impl BlueQueue {
    pub fn new(params: BlueParams, buffer_pkts: usize) -> Self {
        BlueQueue {
            params,
            pm: 0.0,
            last_update: f64::NEG_INFINITY,
            fifo: Fifo::new(buffer_pkts),
        }
    }

    pub fn pm(&self) -> f64 {
        self.pm
    }

    /// Buffer-overflow loss: raise `pm` unless a prior update is still
    /// settling within `freeze_time`.
    pub fn on_loss(&mut self, clock: f64) {
        if clock - self.last_update > self.params.freeze_time {
            self.pm = (self.pm + self.params.d1).min(1.0);
            self.last_update = clock;
        }
    }
}

impl QueueDiscipline for BlueQueue {
    fn enqueue(&mut self, pkt: Packet, clock: f64, rng: &mut SimRng) -> EnqueueOutcome {
        if self.fifo.is_full() {
            self.on_loss(clock);
            return EnqueueOutcome::dropped(DropReason::Overflow);
        }
        if self.pm > 0.0 && rng.next_f64() < self.pm {
            return EnqueueOutcome::dropped(DropReason::Probabilistic);
        }
        self.fifo.push(pkt, clock);
        EnqueueOutcome::accepted()
    }

    fn dequeue(&mut self, _clock: f64) -> Option<Packet> {
        self.fifo.pop_front()
    }

    fn on_idle(&mut self, clock: f64) {
        if clock - self.last_update > self.params.freeze_time {
            self.pm = (self.pm - self.params.d2).max(0.0);
            self.last_update = clock;
        }
    }

    fn fifo(&self) -> &Fifo {
        &self.fifo
    }

    fn name(&self) -> &'static str {
        "blue"
    }
}
