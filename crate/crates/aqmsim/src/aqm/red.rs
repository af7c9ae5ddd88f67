//! RED: random early detection.
//!
//! An EWMA of the queue length drives a linear drop-probability ramp between
//! `min_th` and `max_th`; above `max_th` every arrival is dropped. The count
//! term spreads drops evenly between the ramp endpoints.

use super::{DropReason, EnqueueOutcome, Fifo, QueueDiscipline};
use crate::packet::Packet;
use crate::rng::SimRng;

#[derive(Debug, Clone)]
pub struct RedParams {
    /// EWMA weight for the average queue length.
    pub w_q: f64,
    pub min_th: f64,
    pub max_th: f64,
    /// Drop probability at `max_th`.
    pub max_p: f64,
    /// Typical packet service time, used to decay the average across idle
    /// periods (one zero-length sample per service time of idle).
    pub idle_service_s: f64,
}

impl Default for RedParams {
    fn default() -> Self {
        RedParams {
            w_q: 0.002,
            min_th: 50.0,
            max_th: 100.0,
            max_p: 0.02,
            idle_service_s: 0.008,
        }
    }
}

/// The average-queue and drop-probability machinery, shared by RED, FRED and
/// CHOKe.
#[derive(Debug, Clone)]
pub struct RedCore {
    pub params: RedParams,
    pub avg: f64,
    /// Packets accepted in the probabilistic band since the last drop.
    pub count: u64,
    idle_since: Option<f64>,
}

impl RedCore {
    pub fn new(params: RedParams) -> Self {
        assert!(params.w_q > 0.0 && params.w_q <= 1.0);
        assert!(params.min_th >= 0.0 && params.min_th < params.max_th);
        assert!(params.max_p > 0.0 && params.max_p <= 1.0);
        RedCore {
            params,
            avg: 0.0,
            count: 0,
            idle_since: None,
        }
    }

    /// EWMA update with the instantaneous queue length. If the queue has been
    /// idle, the average first decays as if zero-length samples had arrived
    /// during the idle period.
    pub fn avg_update(&mut self, q_len: usize, clock: f64) -> f64 {
        if let Some(t0) = self.idle_since {
            if q_len == 0 {
                let steps = ((clock - t0) / self.params.idle_service_s).floor();
                if steps > 0.0 {
                    self.avg *= (1.0 - self.params.w_q).powf(steps);
                    self.idle_since = Some(t0 + steps * self.params.idle_service_s);
                }
            } else {
                self.idle_since = None;
            }
        }
        self.avg = (1.0 - self.params.w_q) * self.avg + self.params.w_q * q_len as f64;
        if self.avg <= self.params.min_th {
            self.count = 0;
        }
        self.avg
    }

    /// Current drop probability: 0 at or below `min_th`, 1 at or above
    /// `max_th`, otherwise the linear ramp spread by the count term.
    pub fn drop_prob(&self) -> f64 {
        let p = &self.params;
        if self.avg <= p.min_th {
            return 0.0;
        }
        if self.avg >= p.max_th {
            return 1.0;
        }
        let p_b = p.max_p * (self.avg - p.min_th) / (p.max_th - p.min_th);
        let denom = 1.0 - self.count as f64 * p_b;
        if denom <= 0.0 {
            1.0
        } else {
            (p_b / denom).clamp(0.0, 1.0)
        }
    }

    /// Decides drop/accept from the current probability and updates the count.
    /// Draws from the RNG only when the outcome is genuinely random.
    pub fn probabilistic_drop(&mut self, rng: &mut SimRng) -> bool {
        let p = self.drop_prob();
        let drop = if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            rng.next_bool(p)
        };
        if drop {
            self.count = 0;
        } else if self.avg > self.params.min_th {
            self.count += 1;
        }
        drop
    }

    pub fn note_drop(&mut self) {
        self.count = 0;
    }

    /// Marks the start of an idle period (queue drained to empty).
    pub fn note_empty(&mut self, clock: f64) {
        self.idle_since = Some(clock);
    }

    pub fn note_occupied(&mut self) {
        self.idle_since = None;
    }
}

#[derive(Debug, Clone)]
pub struct RedQueue {
    pub core: RedCore,
    fifo: Fifo,
}

impl RedQueue {
    pub fn new(params: RedParams, buffer_pkts: usize) -> Self {
        RedQueue {
            core: RedCore::new(params),
            fifo: Fifo::new(buffer_pkts),
        }
    }

    pub fn avg(&self) -> f64 {
        self.core.avg
    }
}

impl QueueDiscipline for RedQueue {
    fn enqueue(&mut self, pkt: Packet, clock: f64, rng: &mut SimRng) -> EnqueueOutcome {
        self.core.avg_update(self.fifo.len(), clock);
        if self.fifo.is_full() {
            self.core.note_drop();
            return EnqueueOutcome::dropped(DropReason::Overflow);
        }
        if self.core.probabilistic_drop(rng) {
            return EnqueueOutcome::dropped(DropReason::Probabilistic);
        }
        self.core.note_occupied();
        self.fifo.push(pkt, clock);
        EnqueueOutcome::accepted()
    }

    fn dequeue(&mut self, clock: f64) -> Option<Packet> {
        let pkt = self.fifo.pop_front();
        if pkt.is_some() && self.fifo.is_empty() {
            self.core.note_empty(clock);
        }
        pkt
    }

    fn fifo(&self) -> &Fifo {
        &self.fifo
    }

    fn name(&self) -> &'static str {
        "red"
    }
}
