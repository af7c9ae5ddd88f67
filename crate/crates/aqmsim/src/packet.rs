//! The unit of simulated traffic.

/// Flow identifier. TCP flows occupy `0..n_tcp`, UDP flows follow.
pub type FlowId = u32;

pub const DATA_PKT_BYTES: u32 = 1000;
pub const ACK_PKT_BYTES: u32 = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub flow: FlowId,
    pub size_bytes: u32,
    /// Data packets: sequence number. ACKs: cumulative next-expected sequence.
    pub seq: u64,
    pub is_ack: bool,
    /// Set when the packet is accepted into a queue.
    pub enqueue_time: Option<f64>,
}

impl Packet {
    pub fn data(flow: FlowId, seq: u64, size_bytes: u32) -> Self {
        debug_assert!(size_bytes > 0);
        Packet {
            flow,
            size_bytes,
            seq,
            is_ack: false,
            enqueue_time: None,
        }
    }

    pub fn ack(flow: FlowId, ack_seq: u64, size_bytes: u32) -> Self {
        Packet {
            flow,
            size_bytes,
            seq: ack_seq,
            is_ack: true,
            enqueue_time: None,
        }
    }

    /// Transmission time on a link of the given bandwidth.
    pub fn service_time(&self, bandwidth_bps: f64) -> f64 {
        (self.size_bytes as f64) * 8.0 / bandwidth_bps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn service_time_examples() {
        let p = Packet::data(0, 0, 1000);
        assert!((p.service_time(1_000_000.0) - 0.008).abs() < 1e-12);
        let a = Packet::ack(0, 5, 40);
        assert!((a.service_time(10_000_000.0) - 32e-6).abs() < 1e-12);
    }
}
