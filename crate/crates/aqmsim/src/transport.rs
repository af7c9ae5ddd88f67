//! Traffic generation: a simplified window-based Reno TCP source/sink pair
//! (slow start, AIMD, fast retransmit on three duplicate ACKs, timeout with
//! exponential backoff) and a constant-bit-rate UDP source. TCP reacts to
//! loss; UDP never does.

use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct TcpParams {
    /// Hard cap on the congestion window, in packets.
    pub max_window: u32,
    pub init_rto_s: f64,
    pub min_rto_s: f64,
    pub max_rto_s: f64,
}

impl Default for TcpParams {
    fn default() -> Self {
        TcpParams {
            max_window: 50,
            init_rto_s: 1.0,
            min_rto_s: 0.2,
            max_rto_s: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AckOutcome {
    /// Below the highest cumulative ACK already seen: ignored.
    Stale,
    /// Advanced the window; the caller should send whatever now fits and
    /// restart the retransmission timer.
    New,
    /// Duplicate ACK. On the third, `retransmit` names the packet to resend.
    Dup { retransmit: Option<u64> },
}

/// Sender-side Reno state. Sequence numbers count whole packets; the source
/// has infinite backlog.
#[derive(Debug, Clone)]
pub struct TcpConn {
    params: TcpParams,
    pub cwnd: f64,
    pub ssthresh: f64,
    pub next_seq: u64,
    pub highest_acked: u64,
    pub dup_ack_count: u32,
    pub in_recovery: bool,
    recovery_seq: u64,
    rto_s: f64,
    srtt: Option<f64>,
    rttvar: f64,
    /// The one segment currently being timed for an RTT sample. Aborted on
    /// any retransmission so only clean exchanges feed the estimator.
    timing: Option<(u64, f64)>,
    /// After a timeout the send pointer rewinds; sequences below this mark
    /// are go-back-N resends and are never timed.
    retransmit_until: u64,
}

impl TcpConn {
    pub fn new(params: TcpParams) -> Self {
        let max_window = params.max_window as f64;
        let init_rto = params.init_rto_s;
        TcpConn {
            params,
            cwnd: 1.0,
            ssthresh: max_window,
            next_seq: 0,
            highest_acked: 0,
            dup_ack_count: 0,
            in_recovery: false,
            recovery_seq: 0,
            rto_s: init_rto,
            srtt: None,
            rttvar: 0.0,
            timing: None,
            retransmit_until: 0,
        }
    }

    pub fn rto(&self) -> f64 {
        self.rto_s
    }

    pub fn srtt(&self) -> Option<f64> {
        self.srtt
    }

    pub fn outstanding(&self) -> u64 {
        self.next_seq - self.highest_acked
    }

    /// Window actually usable for sending, never below one packet.
    fn effective_window(&self) -> u64 {
        (self.cwnd.min(self.params.max_window as f64).floor() as u64).max(1)
    }

    pub fn can_send(&self) -> bool {
        self.outstanding() < self.effective_window()
    }

    /// Claims the next sequence number for transmission. After a timeout this
    /// walks back over the unacknowledged range (go-back-N resend).
    pub fn take_next_seq(&mut self, clock: f64) -> u64 {
        debug_assert!(self.can_send());
        let seq = self.next_seq;
        self.next_seq += 1;
        if self.timing.is_none() && seq >= self.retransmit_until {
            self.timing = Some((seq, clock));
        }
        seq
    }

    pub fn note_retransmitted(&mut self, _seq: u64, _clock: f64) {
        self.timing = None;
    }

    fn take_rtt_sample(&mut self, sample: f64) {
        match self.srtt {
            None => {
                self.srtt = Some(sample);
                self.rttvar = sample / 2.0;
            }
            Some(srtt) => {
                self.rttvar = 0.75 * self.rttvar + 0.25 * (srtt - sample).abs();
                self.srtt = Some(0.875 * srtt + 0.125 * sample);
            }
        }
        let rto = self.srtt.unwrap() + 4.0 * self.rttvar;
        self.rto_s = rto.clamp(self.params.min_rto_s, self.params.max_rto_s);
    }

    /// Processes a cumulative ACK (`ack_seq` = next sequence the receiver
    /// expects).
    pub fn on_ack(&mut self, ack_seq: u64, clock: f64) -> AckOutcome {
        if ack_seq < self.highest_acked {
            return AckOutcome::Stale;
        }
        if ack_seq == self.highest_acked {
            if self.outstanding() == 0 {
                return AckOutcome::Stale;
            }
            self.dup_ack_count += 1;
            if self.dup_ack_count == 3 && !self.in_recovery {
                self.ssthresh = (self.cwnd / 2.0).max(2.0);
                self.cwnd = self.ssthresh;
                self.in_recovery = true;
                self.recovery_seq = self.next_seq;
                return AckOutcome::Dup {
                    retransmit: Some(ack_seq),
                };
            }
            return AckOutcome::Dup { retransmit: None };
        }

        // New cumulative ACK. Sample RTT only when it covers the timed
        // segment and no retransmission has intervened.
        if let Some((timed_seq, sent_at)) = self.timing {
            if ack_seq > timed_seq {
                self.take_rtt_sample(clock - sent_at);
                self.timing = None;
            }
        }
        self.highest_acked = ack_seq;
        // Originals still in flight can be acknowledged past a rewound send
        // pointer; never resend what is already acknowledged.
        if self.next_seq < ack_seq {
            self.next_seq = ack_seq;
        }
        self.dup_ack_count = 0;
        if self.in_recovery && ack_seq >= self.recovery_seq {
            self.in_recovery = false;
        }
        if !self.in_recovery {
            if self.cwnd < self.ssthresh {
                self.cwnd += 1.0;
            } else {
                self.cwnd += 1.0 / self.cwnd;
            }
            self.cwnd = self.cwnd.min(self.params.max_window as f64);
        }
        AckOutcome::New
    }

    /// Retransmission timeout: collapse to one packet, back off the timer,
    /// and rewind the send pointer so the unacknowledged range is resent in
    /// slow start, oldest first.
    pub fn on_timeout(&mut self) -> u64 {
        self.ssthresh = (self.cwnd / 2.0).max(2.0);
        self.cwnd = 1.0;
        self.rto_s = (self.rto_s * 2.0).min(self.params.max_rto_s);
        self.dup_ack_count = 0;
        self.in_recovery = false;
        self.timing = None;
        self.retransmit_until = self.retransmit_until.max(self.next_seq);
        self.next_seq = self.highest_acked;
        self.highest_acked
    }
}

/// Receiver side: cumulative ACK generation with out-of-order buffering.
#[derive(Debug, Clone, Default)]
pub struct TcpSink {
    next_expected: u64,
    out_of_order: BTreeSet<u64>,
}

impl TcpSink {
    pub fn new() -> Self {
        TcpSink::default()
    }

    /// Accepts a data packet and returns the cumulative ACK to send back.
    pub fn on_data(&mut self, seq: u64) -> u64 {
        if seq >= self.next_expected {
            self.out_of_order.insert(seq);
            while self.out_of_order.remove(&self.next_expected) {
                self.next_expected += 1;
            }
        }
        self.next_expected
    }
}

/// Constant-bit-rate source. The inter-packet interval is fixed by the rate;
/// drops never change it.
#[derive(Debug, Clone)]
pub struct UdpSource {
    pub rate_bps: f64,
    pub pkt_size_bytes: u32,
    /// Start-time phase within one interval, fixed at construction.
    pub phase_s: f64,
    pub next_seq: u64,
}

impl UdpSource {
    pub fn new(rate_bps: f64, pkt_size_bytes: u32, phase_s: f64) -> Self {
        UdpSource {
            rate_bps,
            pkt_size_bytes,
            phase_s,
            next_seq: 0,
        }
    }

    pub fn interval_s(&self) -> f64 {
        self.pkt_size_bytes as f64 * 8.0 / self.rate_bps
    }

    /// Departure time of packet `k`, anchored to the phase so the spacing
    /// never drifts.
    pub fn departure_time(&self, k: u64) -> f64 {
        self.phase_s + k as f64 * self.interval_s()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conn() -> TcpConn {
        TcpConn::new(TcpParams::default())
    }

    /// Sends everything the window allows, returning the sent count.
    fn fill_window(c: &mut TcpConn, clock: f64) -> u64 {
        let mut n = 0;
        while c.can_send() {
            c.take_next_seq(clock);
            n += 1;
        }
        n
    }

    #[test]
    fn slow_start_increments_per_ack() {
        let mut c = conn();
        c.ssthresh = 32.0;
        fill_window(&mut c, 0.0);
        assert_eq!(c.on_ack(1, 0.1), AckOutcome::New);
        assert_eq!(c.cwnd, 2.0);
    }

    #[test]
    fn congestion_avoidance_grows_by_reciprocal() {
        let mut c = conn();
        c.cwnd = 10.0;
        c.ssthresh = 5.0;
        fill_window(&mut c, 0.0);
        c.on_ack(1, 0.1);
        assert!((c.cwnd - 10.1).abs() < 1e-12);
    }

    #[test]
    fn third_dup_ack_halves_and_retransmits() {
        let mut c = conn();
        c.cwnd = 16.0;
        fill_window(&mut c, 0.0);
        assert_eq!(c.on_ack(0, 0.2), AckOutcome::Dup { retransmit: None });
        assert_eq!(c.on_ack(0, 0.3), AckOutcome::Dup { retransmit: None });
        let out = c.on_ack(0, 0.4);
        assert_eq!(out, AckOutcome::Dup { retransmit: Some(0) });
        assert_eq!(c.ssthresh, 8.0);
        assert_eq!(c.cwnd, 8.0);
        assert!(c.in_recovery);
    }

    #[test]
    fn stale_ack_ignored() {
        let mut c = conn();
        fill_window(&mut c, 0.0);
        c.on_ack(1, 0.1);
        assert_eq!(c.on_ack(0, 0.2), AckOutcome::Stale);
    }

    #[test]
    fn timeout_collapses_window() {
        let mut c = conn();
        c.cwnd = 20.0;
        fill_window(&mut c, 0.0);
        let seq = c.on_timeout();
        assert_eq!(seq, 0);
        assert_eq!(c.ssthresh, 10.0);
        assert_eq!(c.cwnd, 1.0);
        // Send pointer rewound: the next send resends the oldest unacked.
        assert!(c.can_send());
        assert_eq!(c.take_next_seq(1.0), 0);
        assert!(!c.can_send());
    }

    #[test]
    fn goback_resend_covers_holes_without_new_timeouts() {
        let mut c = conn();
        c.cwnd = 8.0;
        fill_window(&mut c, 0.0); // seqs 0..8 outstanding
        c.on_timeout();
        let mut sink = TcpSink::new();
        // Suppose 2..8 arrived before the loss; 0 and 1 are the holes.
        for seq in 2..8 {
            sink.on_data(seq);
        }
        // Slow-start resend: each resent packet is cumulatively acked and the
        // whole hole range clears within a couple of round trips.
        let mut clock = 1.0;
        let mut rounds = 0;
        while c.outstanding() > 0 || c.highest_acked < 8 {
            let mut acks = Vec::new();
            while c.can_send() && c.next_seq < 8 {
                acks.push(sink.on_data(c.take_next_seq(clock)));
            }
            clock += 0.05;
            for a in acks {
                c.on_ack(a, clock);
            }
            rounds += 1;
            assert!(rounds < 10, "resend failed to converge");
        }
        assert_eq!(c.highest_acked, 8);
    }

    #[test]
    fn timeout_doubles_rto_capped() {
        let mut c = conn();
        fill_window(&mut c, 0.0);
        assert_eq!(c.rto(), 1.0);
        c.on_timeout();
        assert_eq!(c.rto(), 2.0);
        for _ in 0..10 {
            c.on_timeout();
        }
        assert_eq!(c.rto(), 60.0);
    }

    #[test]
    fn timeout_floors_ssthresh_at_two() {
        let mut c = conn();
        c.cwnd = 1.0;
        fill_window(&mut c, 0.0);
        c.on_timeout();
        assert_eq!(c.ssthresh, 2.0);
        assert_eq!(c.cwnd, 1.0);
    }

    #[test]
    fn window_bounds_outstanding() {
        let mut c = conn();
        c.cwnd = 7.9;
        let sent = fill_window(&mut c, 0.0);
        assert_eq!(sent, 7);
        assert!(!c.can_send());
        c.on_ack(3, 0.1);
        assert!(c.outstanding() <= c.cwnd.floor() as u64);
    }

    #[test]
    fn cwnd_never_exceeds_max_window() {
        let mut c = conn();
        let mut clock = 0.0;
        for _ in 0..500 {
            fill_window(&mut c, clock);
            clock += 0.01;
            c.on_ack(c.next_seq, clock);
            assert!(c.cwnd <= 50.0);
            assert!(c.cwnd >= 1.0);
        }
        assert_eq!(c.cwnd, 50.0);
    }

    #[test]
    fn rtt_estimator_tracks_constant_rtt() {
        let mut c = conn();
        let mut clock = 0.0;
        for _ in 0..100 {
            fill_window(&mut c, clock);
            clock += 0.05;
            c.on_ack(c.next_seq, clock);
        }
        let srtt = c.srtt().unwrap();
        assert!((srtt - 0.05).abs() < 1e-6, "srtt {srtt}");
        // rttvar decays toward zero; RTO floors at the minimum.
        assert_eq!(c.rto(), 0.2);
    }

    #[test]
    fn karn_skips_retransmitted_segments() {
        let mut c = conn();
        fill_window(&mut c, 0.0);
        c.note_retransmitted(0, 5.0);
        c.on_ack(1, 5.1);
        assert!(c.srtt().is_none());
    }

    #[test]
    fn recovery_exits_at_recovery_point() {
        let mut c = conn();
        c.cwnd = 8.0;
        c.ssthresh = 4.0;
        fill_window(&mut c, 0.0);
        for _ in 0..3 {
            c.on_ack(0, 0.1);
        }
        assert!(c.in_recovery);
        let recovery_end = c.next_seq;
        // Partial advance: still in recovery.
        c.on_ack(recovery_end - 1, 0.2);
        assert!(c.in_recovery);
        c.on_ack(recovery_end, 0.3);
        assert!(!c.in_recovery);
    }

    #[test]
    fn sink_acks_cumulatively_and_reorders() {
        let mut s = TcpSink::new();
        assert_eq!(s.on_data(0), 1);
        assert_eq!(s.on_data(2), 1); // hole at 1
        assert_eq!(s.on_data(3), 1);
        assert_eq!(s.on_data(1), 4); // hole filled, jumps ahead
        assert_eq!(s.on_data(1), 4); // duplicate data re-acked
    }

    #[test]
    fn udp_intervals() {
        let s = UdpSource::new(1_000_000.0, 1000, 0.0);
        assert!((s.interval_s() - 0.008).abs() < 1e-12);
        let s = UdpSource::new(8_000_000.0, 1000, 0.0);
        assert!((s.interval_s() - 0.001).abs() < 1e-12);
        let s = UdpSource::new(100_000.0, 1000, 0.0);
        assert!((s.interval_s() - 0.080).abs() < 1e-12);
    }

    #[test]
    fn udp_departures_evenly_spaced() {
        let s = UdpSource::new(4_000_000.0, 1000, 0.0013);
        for k in 0..1000 {
            let gap = s.departure_time(k + 1) - s.departure_time(k);
            assert!((gap - s.interval_s()).abs() < 1e-9);
        }
    }
}
