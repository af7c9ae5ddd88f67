//! Drop Tail: drop only when the buffer is full.

use super::{DropReason, EnqueueOutcome, Fifo, QueueDiscipline};
use crate::packet::Packet;
use crate::rng::SimRng;

#[derive(Debug, Clone)]
pub struct DropTailQueue {
    fifo: Fifo,
}

impl DropTailQueue {
    pub fn new(buffer_pkts: usize) -> Self {
        DropTailQueue {
            fifo: Fifo::new(buffer_pkts),
        }
    }
}

impl QueueDiscipline for DropTailQueue {
    fn enqueue(&mut self, pkt: Packet, clock: f64, _rng: &mut SimRng) -> EnqueueOutcome {
        if self.fifo.is_full() {
            EnqueueOutcome::dropped(DropReason::Overflow)
        } else {
            self.fifo.push(pkt, clock);
            EnqueueOutcome::accepted()
        }
    }

    fn dequeue(&mut self, _clock: f64) -> Option<Packet> {
        self.fifo.pop_front()
    }

    fn fifo(&self) -> &Fifo {
        &self.fifo
    }

    fn name(&self) -> &'static str {
        "droptail"
    }
}
