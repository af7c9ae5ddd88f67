//! FRED: flow random early drop.
//!
//! RED's average-queue machinery plus per-active-flow accounting. A flow has
//! state only while it has packets buffered. Flows over their per-flow cap
//! collect strikes and are clamped to the average per-flow buffer use.

use std::collections::HashMap;

use super::red::{RedCore, RedParams};
use super::{DropReason, EnqueueOutcome, Fifo, QueueDiscipline};
use crate::packet::{FlowId, Packet};
use crate::rng::SimRng;

#[derive(Debug, Clone)]
pub struct FredParams {
    pub red: RedParams,
    /// Minimum number of packets every flow may buffer unconditionally.
    pub min_q: f64,
}

impl Default for FredParams {
    fn default() -> Self {
        FredParams {
            red: RedParams::default(),
            min_q: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
struct FlowEntry {
    qlen: u32,
    strike: u32,
}

#[derive(Debug, Clone)]
pub struct FredQueue {
    pub core: RedCore,
    min_q: f64,
    /// Average per-active-flow buffer use, updated at departures.
    avgcq: f64,
    /// Exactly the flows with at least one packet buffered.
    flows: HashMap<FlowId, FlowEntry>,
    fifo: Fifo,
}

impl FredQueue {
    pub fn new(params: FredParams, buffer_pkts: usize) -> Self {
        FredQueue {
            core: RedCore::new(params.red),
            min_q: params.min_q,
            avgcq: 0.0,
            flows: HashMap::new(),
            fifo: Fifo::new(buffer_pkts),
        }
    }

    pub fn n_active(&self) -> usize {
        self.flows.len()
    }

    pub fn avgcq(&self) -> f64 {
        self.avgcq
    }

    pub fn flow_qlen(&self, flow: FlowId) -> u32 {
        self.flows.get(&flow).map_or(0, |e| e.qlen)
    }

    pub fn flow_strike(&self, flow: FlowId) -> u32 {
        self.flows.get(&flow).map_or(0, |e| e.strike)
    }

    fn accept(&mut self, pkt: Packet, clock: f64) -> EnqueueOutcome {
        if self.fifo.is_full() {
            self.core.note_drop();
            return EnqueueOutcome::dropped(DropReason::Overflow);
        }
        let entry = self
            .flows
            .entry(pkt.flow)
            .or_insert(FlowEntry { qlen: 0, strike: 0 });
        entry.qlen += 1;
        self.core.note_occupied();
        self.fifo.push(pkt, clock);
        EnqueueOutcome::accepted()
    }
}

impl QueueDiscipline for FredQueue {
    fn enqueue(&mut self, pkt: Packet, clock: f64, rng: &mut SimRng) -> EnqueueOutcome {
        let p = self.core.params.clone();
        let avg = self.core.avg_update(self.fifo.len(), clock);

        let (qlen, strike) = self
            .flows
            .get(&pkt.flow)
            .map_or((0.0, 0), |e| (e.qlen as f64, e.strike));

        let max_q = if avg >= p.max_th { 2.0 } else { p.min_th };

        // Over the per-flow cap, or persistently over the fair share: strike
        // and drop.
        if qlen >= max_q
            || (avg >= p.max_th && qlen > 2.0 * self.avgcq)
            || (qlen >= self.avgcq && strike > 1)
        {
            let entry = self
                .flows
                .get_mut(&pkt.flow)
                .expect("striked flow has packets buffered");
            entry.strike += 1;
            self.core.note_drop();
            return EnqueueOutcome::dropped(DropReason::Probabilistic);
        }

        if avg < p.min_th {
            return self.accept(pkt, clock);
        }
        if avg < p.max_th {
            // Protect flows below the fair share; subject the rest to RED.
            if qlen >= self.min_q.max(self.avgcq) && self.core.probabilistic_drop(rng) {
                return EnqueueOutcome::dropped(DropReason::Probabilistic);
            }
            return self.accept(pkt, clock);
        }
        self.core.note_drop();
        EnqueueOutcome::dropped(DropReason::Probabilistic)
    }

    fn dequeue(&mut self, clock: f64) -> Option<Packet> {
        let pkt = self.fifo.pop_front()?;
        // Average queue length is maintained at departures as well.
        let avg = self.core.avg_update(self.fifo.len(), clock);
        if self.fifo.is_empty() {
            self.core.note_empty(clock);
        }
        let entry = self
            .flows
            .get_mut(&pkt.flow)
            .expect("departing packet from unknown flow");
        entry.qlen -= 1;
        if entry.qlen == 0 {
            self.flows.remove(&pkt.flow);
        }
        self.avgcq = if self.flows.is_empty() {
            avg
        } else {
            avg / self.flows.len() as f64
        };
        Some(pkt)
    }

    fn fifo(&self) -> &Fifo {
        &self.fifo
    }

    fn name(&self) -> &'static str {
        "fred"
    }
}
