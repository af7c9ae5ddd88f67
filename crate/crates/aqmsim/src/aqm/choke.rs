//! CHOKe: choose and keep for responsive flows, choose and kill for
//! unresponsive ones.
//!
//! Above `min_th` every arrival is compared against randomly drawn candidate
//! packets from the queue; flow-id matches drop both the candidates and the
//! arrival. Without a match the arrival faces the RED drop probability.

use super::red::{RedCore, RedParams};
use super::{DropReason, EnqueueOutcome, Fifo, QueueDiscipline, Verdict};
use crate::packet::Packet;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChokeVariant {
    /// One candidate per arrival.
    Basic,
    /// Fixed number of candidates per arrival.
    Multi(u32),
    /// Candidate count grows with congestion: the band between the thresholds
    /// is split into `k` regions and region `i` draws `2 i` candidates.
    Adaptive(u32),
}

#[derive(Debug, Clone)]
pub struct ChokeQueue {
    pub core: RedCore,
    variant: ChokeVariant,
    fifo: Fifo,
}

/// Draws `m` distinct queue positions uniformly from `[0, qlen)`.
fn draw_positions(rng: &mut SimRng, qlen: usize, m: usize, out: &mut Vec<usize>) {
    out.clear();
    if m >= qlen {
        out.extend(0..qlen);
        return;
    }
    while out.len() < m {
        let pos = rng.next_index(qlen);
        if !out.contains(&pos) {
            out.push(pos);
        }
    }
}

impl ChokeQueue {
    pub fn new(red: RedParams, variant: ChokeVariant, buffer_pkts: usize) -> Self {
        if let ChokeVariant::Multi(m) = variant {
            assert!(m >= 1);
        }
        if let ChokeVariant::Adaptive(k) = variant {
            assert!(k >= 1);
        }
        ChokeQueue {
            core: RedCore::new(red),
            variant,
            fifo: Fifo::new(buffer_pkts),
        }
    }

    /// Number of drop candidates to draw at the current average queue length.
    /// Only meaningful at or above `min_th`.
    pub fn candidate_count(&self) -> usize {
        match self.variant {
            ChokeVariant::Basic => 1,
            ChokeVariant::Multi(m) => m as usize,
            ChokeVariant::Adaptive(k) => {
                let p = &self.core.params;
                let span = p.max_th - p.min_th;
                let frac = ((self.core.avg - p.min_th) / span).max(0.0);
                let region = (1 + (k as f64 * frac) as u64).min(k as u64);
                (2 * region) as usize
            }
        }
    }
}

impl QueueDiscipline for ChokeQueue {
    fn enqueue(&mut self, pkt: Packet, clock: f64, rng: &mut SimRng) -> EnqueueOutcome {
        let avg = self.core.avg_update(self.fifo.len(), clock);

        if avg < self.core.params.min_th {
            if self.fifo.is_full() {
                self.core.note_drop();
                return EnqueueOutcome::dropped(DropReason::Overflow);
            }
            self.core.note_occupied();
            self.fifo.push(pkt, clock);
            return EnqueueOutcome::accepted();
        }

        // Compare against randomly drawn candidates; matching happens above
        // max_th as well, to pull the queue back down fast.
        let mut victims = Vec::new();
        if !self.fifo.is_empty() {
            let m = self.candidate_count();
            let mut positions = Vec::with_capacity(m);
            draw_positions(rng, self.fifo.len(), m, &mut positions);
            positions.retain(|&i| self.fifo.get(i).is_some_and(|c| c.flow == pkt.flow));
            // Remove back to front so earlier positions stay valid.
            positions.sort_unstable_by(|a, b| b.cmp(a));
            for i in positions {
                victims.push(self.fifo.remove(i).expect("drawn position in range"));
            }
        }
        if !victims.is_empty() {
            self.core.note_drop();
            return EnqueueOutcome {
                verdict: Verdict::Dropped(DropReason::Matched),
                victims,
            };
        }

        if avg >= self.core.params.max_th {
            self.core.note_drop();
            return EnqueueOutcome::dropped(DropReason::Probabilistic);
        }
        if self.core.probabilistic_drop(rng) {
            return EnqueueOutcome::dropped(DropReason::Probabilistic);
        }
        if self.fifo.is_full() {
            self.core.note_drop();
            return EnqueueOutcome::dropped(DropReason::Overflow);
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
        "choke"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn red_wide() -> RedParams {
        // Thresholds far above any test occupancy: CHOKe stays passive.
        RedParams {
            min_th: 1e9,
            max_th: 2e9,
            ..RedParams::default()
        }
    }

    #[test]
    fn below_min_th_accepts_without_drawing() {
        let mut q = ChokeQueue::new(RedParams::default(), ChokeVariant::Basic, 150);
        let mut rng = SimRng::new(1);
        let before = rng.clone().next_u64();
        assert!(q.enqueue(Packet::data(0, 0, 1000), 0.0, &mut rng).was_accepted());
        // No candidate was drawn: the RNG stream is untouched.
        assert_eq!(rng.next_u64(), before);
    }

    #[test]
    fn variant_candidate_counts() {
        let q = ChokeQueue::new(RedParams::default(), ChokeVariant::Basic, 150);
        assert_eq!(q.candidate_count(), 1);
        let q = ChokeQueue::new(RedParams::default(), ChokeVariant::Multi(4), 150);
        assert_eq!(q.candidate_count(), 4);

        let mut q = ChokeQueue::new(RedParams::default(), ChokeVariant::Adaptive(5), 150);
        q.core.avg = 55.0;
        assert_eq!(q.candidate_count(), 2); // region 1
        q.core.avg = 99.0;
        assert_eq!(q.candidate_count(), 10); // region 5
        q.core.avg = 130.0;
        assert_eq!(q.candidate_count(), 10); // above max_th: region k
    }

    #[test]
    fn matching_drops_arrival_and_victim() {
        // Single-flow queue with the average pinned above min_th: every
        // arrival must remove at least one victim plus itself.
        let mut q = ChokeQueue::new(
            RedParams {
                w_q: 1.0,
                min_th: 10.0,
                max_th: 1e9,
                ..RedParams::default()
            },
            ChokeVariant::Basic,
            150,
        );
        let mut rng = SimRng::new(2);
        // With w_q = 1 the average tracks the instantaneous length, which
        // stays below min_th during the fill and hits it on the probe.
        for i in 0..10 {
            assert!(q.enqueue(Packet::data(3, i, 1000), 0.0, &mut rng).was_accepted());
        }
        let len_before = q.len();
        let out = q.enqueue(Packet::data(3, 10, 1000), 0.0, &mut rng);
        assert_eq!(out.verdict, Verdict::Dropped(DropReason::Matched));
        assert_eq!(out.victims.len(), 1);
        assert_eq!(out.victims[0].flow, 3);
        assert_eq!(q.len(), len_before - 1);
    }

    #[test]
    fn mismatched_candidate_stays_in_queue() {
        let mut q = ChokeQueue::new(
            RedParams {
                w_q: 1.0,
                min_th: 2.0,
                max_th: 1e9,
                max_p: 1e-9,
                ..RedParams::default()
            },
            ChokeVariant::Basic,
            150,
        );
        let mut rng = SimRng::new(2);
        assert!(q.enqueue(Packet::data(1, 0, 1000), 0.0, &mut rng).was_accepted());
        assert!(q.enqueue(Packet::data(1, 1, 1000), 0.0, &mut rng).was_accepted());
        // Different flow: candidate kept, arrival faces the (tiny) RED ramp.
        let out = q.enqueue(Packet::data(2, 0, 1000), 0.0, &mut rng);
        assert!(out.victims.is_empty());
        assert!(out.was_accepted());
        assert_eq!(q.len(), 3);
    }

    #[test]
    fn empty_queue_skips_matching() {
        let mut q = ChokeQueue::new(
            RedParams {
                w_q: 0.000001,
                min_th: 5.0,
                max_th: 1e9,
                ..RedParams::default()
            },
            ChokeVariant::Basic,
            150,
        );
        q.core.avg = 50.0;
        let mut rng = SimRng::new(2);
        let out = q.enqueue(Packet::data(1, 0, 1000), 0.0, &mut rng);
        assert!(out.was_accepted());
    }

    #[test]
    fn multi_draw_removes_all_matching_candidates() {
        let mut q = ChokeQueue::new(
            RedParams {
                w_q: 1.0,
                min_th: 8.0,
                max_th: 1e9,
                ..RedParams::default()
            },
            ChokeVariant::Multi(8),
            150,
        );
        let mut rng = SimRng::new(7);
        for i in 0..8 {
            q.enqueue(Packet::data(9, i, 1000), 0.0, &mut rng);
        }
        // All eight positions are drawn (m >= qlen), all match.
        let out = q.enqueue(Packet::data(9, 8, 1000), 0.0, &mut rng);
        assert_eq!(out.victims.len(), 8);
        assert_eq!(q.len(), 0);
    }

    #[test]
    fn draw_positions_unbiased() {
        let mut rng = SimRng::new(11);
        let mut counts = [0u32; 10];
        let mut buf = Vec::new();
        for _ in 0..100_000 {
            draw_positions(&mut rng, 10, 1, &mut buf);
            counts[buf[0]] += 1;
        }
        for c in counts {
            assert!((9_000..11_000).contains(&c), "position count {c}");
        }
    }

    #[test]
    fn draw_positions_distinct() {
        let mut rng = SimRng::new(12);
        let mut buf = Vec::new();
        for _ in 0..1000 {
            draw_positions(&mut rng, 20, 6, &mut buf);
            let mut sorted = buf.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 6);
        }
    }

    #[test]
    fn passive_when_thresholds_high() {
        let mut q = ChokeQueue::new(red_wide(), ChokeVariant::Basic, 10);
        let mut rng = SimRng::new(3);
        for i in 0..10 {
            assert!(q.enqueue(Packet::data(0, i, 1000), 0.0, &mut rng).was_accepted());
        }
        let out = q.enqueue(Packet::data(0, 10, 1000), 0.0, &mut rng);
        assert_eq!(out.verdict, Verdict::Dropped(DropReason::Overflow));
    }
}
