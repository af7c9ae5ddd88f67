//! Topology primitives and the dumbbell builder.
//!
//! Sources on the left, sinks on the right, two gateways in between. The
//! forward gateway-to-gateway link is the bottleneck and carries the
//! discipline under study; every other link is Drop Tail with an ample buffer
//! so congestion happens in exactly one place.

use crate::aqm::{DropTailQueue, QueueDiscipline};
use crate::error::ConfigError;
use crate::packet::{FlowId, Packet};

pub type LinkId = usize;

/// Buffer for links that must never drop (access and reverse paths).
const AMPLE_BUFFER_PKTS: usize = 1_000_000;

/// Where a packet can arrive after crossing a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Place {
    Source(FlowId),
    Gateway0,
    Gateway1,
    Sink(FlowId),
}

/// Unidirectional link: one transmitter plus a queue discipline feeding it.
pub struct Link {
    pub bandwidth_bps: f64,
    pub prop_delay_s: f64,
    pub dst: Place,
    pub discipline: Box<dyn QueueDiscipline>,
    /// The packet currently being serialized, if any.
    pub in_flight: Option<Packet>,
}

impl Link {
    pub fn new(
        bandwidth_bps: f64,
        prop_delay_s: f64,
        dst: Place,
        discipline: Box<dyn QueueDiscipline>,
    ) -> Self {
        Link {
            bandwidth_bps,
            prop_delay_s,
            dst,
            discipline,
            in_flight: None,
        }
    }

    pub fn busy(&self) -> bool {
        self.in_flight.is_some()
    }

    pub fn service_time(&self, pkt: &Packet) -> f64 {
        pkt.service_time(self.bandwidth_bps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumbbellTopology {
    pub n_tcp: usize,
    pub n_udp: usize,
    pub bottleneck_bw_bps: f64,
    pub bottleneck_delay_s: f64,
    pub access_bw_bps: f64,
    pub access_delay_s: f64,
    pub buffer_pkts: usize,
}

impl Default for DumbbellTopology {
    fn default() -> Self {
        DumbbellTopology {
            n_tcp: 10,
            n_udp: 1,
            bottleneck_bw_bps: 1e6,
            bottleneck_delay_s: 0.010,
            access_bw_bps: 10e6,
            access_delay_s: 0.001,
            buffer_pkts: 150,
        }
    }
}

impl DumbbellTopology {
    pub fn n_flows(&self) -> usize {
        self.n_tcp + self.n_udp
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_flows() == 0 {
            return Err(ConfigError::Invalid("topology has zero flows".into()));
        }
        if self.buffer_pkts == 0 {
            return Err(ConfigError::Invalid("buffer_pkts must be positive".into()));
        }
        // Written to also reject NaN from a parsed config.
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.bottleneck_bw_bps) || !positive(self.access_bw_bps) {
            return Err(ConfigError::Invalid("link bandwidth must be positive".into()));
        }
        if self.access_bw_bps < self.bottleneck_bw_bps {
            return Err(ConfigError::Invalid(format!(
                "access bandwidth {} below bottleneck {}; the shared link must be the bottleneck",
                self.access_bw_bps, self.bottleneck_bw_bps
            )));
        }
        if self.bottleneck_delay_s < 0.0 || self.access_delay_s < 0.0 {
            return Err(ConfigError::Invalid("propagation delay must be >= 0".into()));
        }
        Ok(())
    }
}

/// The built dumbbell: links indexed by id, grouped by role. Per flow `f`
/// the forward path is `Source(f) -> G0 -> G1 -> Sink(f)` and ACKs return via
/// `Sink(f) -> G1 -> G0 -> Source(f)`.
pub struct Dumbbell {
    pub links: Vec<Link>,
    /// Source(f) -> Gateway0, one per flow.
    pub src_access: Vec<LinkId>,
    /// Gateway0 -> Gateway1, the bottleneck under study.
    pub bottleneck: LinkId,
    /// Gateway1 -> Sink(f).
    pub sink_delivery: Vec<LinkId>,
    /// Sink(f) -> Gateway1 (ACK path).
    pub sink_access: Vec<LinkId>,
    /// Gateway1 -> Gateway0 (ACK path).
    pub bottleneck_rev: LinkId,
    /// Gateway0 -> Source(f) (ACK path).
    pub src_delivery: Vec<LinkId>,
}

impl Dumbbell {
    /// Next link on a packet's route after arriving at `place`, or `None` if
    /// the packet has reached an endpoint.
    pub fn route(&self, place: Place, pkt: &Packet) -> Option<LinkId> {
        match place {
            Place::Gateway0 => Some(if pkt.is_ack {
                self.src_delivery[pkt.flow as usize]
            } else {
                self.bottleneck
            }),
            Place::Gateway1 => Some(if pkt.is_ack {
                self.bottleneck_rev
            } else {
                self.sink_delivery[pkt.flow as usize]
            }),
            Place::Source(_) | Place::Sink(_) => None,
        }
    }
}

/// Builds the dumbbell graph around a bottleneck discipline.
pub fn build_dumbbell(
    topo: &DumbbellTopology,
    bottleneck_discipline: Box<dyn QueueDiscipline>,
) -> Result<Dumbbell, ConfigError> {
    topo.validate()?;
    let n = topo.n_flows();
    let mut links = Vec::with_capacity(4 * n + 2);
    let droptail = || Box::new(DropTailQueue::new(AMPLE_BUFFER_PKTS));

    let src_access: Vec<LinkId> = (0..n)
        .map(|_| {
            links.push(Link::new(
                topo.access_bw_bps,
                topo.access_delay_s,
                Place::Gateway0,
                droptail(),
            ));
            links.len() - 1
        })
        .collect();

    links.push(Link::new(
        topo.bottleneck_bw_bps,
        topo.bottleneck_delay_s,
        Place::Gateway1,
        bottleneck_discipline,
    ));
    let bottleneck = links.len() - 1;

    let sink_delivery: Vec<LinkId> = (0..n)
        .map(|f| {
            links.push(Link::new(
                topo.access_bw_bps,
                topo.access_delay_s,
                Place::Sink(f as FlowId),
                droptail(),
            ));
            links.len() - 1
        })
        .collect();

    let sink_access: Vec<LinkId> = (0..n)
        .map(|_| {
            links.push(Link::new(
                topo.access_bw_bps,
                topo.access_delay_s,
                Place::Gateway1,
                droptail(),
            ));
            links.len() - 1
        })
        .collect();

    links.push(Link::new(
        topo.bottleneck_bw_bps,
        topo.bottleneck_delay_s,
        Place::Gateway0,
        droptail(),
    ));
    let bottleneck_rev = links.len() - 1;

    let src_delivery: Vec<LinkId> = (0..n)
        .map(|f| {
            links.push(Link::new(
                topo.access_bw_bps,
                topo.access_delay_s,
                Place::Source(f as FlowId),
                droptail(),
            ));
            links.len() - 1
        })
        .collect();

    Ok(Dumbbell {
        links,
        src_access,
        bottleneck,
        sink_delivery,
        sink_access,
        bottleneck_rev,
        src_delivery,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aqm::DropTailQueue;

    fn bottleneck_queue() -> Box<dyn QueueDiscipline> {
        Box::new(DropTailQueue::new(150))
    }

    #[test]
    fn builds_standard_dumbbell() {
        let topo = DumbbellTopology::default();
        let d = build_dumbbell(&topo, bottleneck_queue()).unwrap();
        // 11 forward flows share the single bottleneck queue.
        assert_eq!(d.src_access.len(), 11);
        for f in 0..11u32 {
            let pkt = Packet::data(f, 0, 1000);
            assert_eq!(d.route(Place::Gateway0, &pkt), Some(d.bottleneck));
        }
        assert_eq!(d.links.len(), 4 * 11 + 2);
    }

    #[test]
    fn builds_blue_scenario_shape() {
        let topo = DumbbellTopology {
            n_tcp: 49,
            n_udp: 1,
            access_bw_bps: 100e6,
            buffer_pkts: 300,
            ..DumbbellTopology::default()
        };
        let d = build_dumbbell(&topo, bottleneck_queue()).unwrap();
        assert_eq!(d.src_access.len(), 50);
        assert_eq!(d.links[d.bottleneck].dst, Place::Gateway1);
    }

    #[test]
    fn zero_flows_is_an_error() {
        let topo = DumbbellTopology {
            n_tcp: 0,
            n_udp: 0,
            ..DumbbellTopology::default()
        };
        assert!(build_dumbbell(&topo, bottleneck_queue()).is_err());
    }

    #[test]
    fn access_slower_than_bottleneck_is_an_error() {
        let topo = DumbbellTopology {
            access_bw_bps: 0.5e6,
            ..DumbbellTopology::default()
        };
        assert!(topo.validate().is_err());
    }

    #[test]
    fn acks_route_backwards() {
        let topo = DumbbellTopology::default();
        let d = build_dumbbell(&topo, bottleneck_queue()).unwrap();
        let ack = Packet::ack(3, 7, 40);
        assert_eq!(d.route(Place::Gateway1, &ack), Some(d.bottleneck_rev));
        assert_eq!(d.route(Place::Gateway0, &ack), Some(d.src_delivery[3]));
        assert_eq!(d.route(Place::Source(3), &ack), None);
    }
}
