//! The per-run simulation engine: owns the event queue, the dumbbell, the
//! traffic sources and the measurement hooks, and dispatches events until the
//! configured duration.

use crate::aqm::{
    BlueParams, BlueQueue, ChokeQueue, ChokeVariant, DropReason, DropTailQueue, FredParams,
    FredQueue, QueueDiscipline, RedParams, RedQueue, SfbParams, SfbQueue, Verdict,
};
use crate::config::{AqmKind, ChokeVariantKind, ScenarioConfig};
use crate::error::ConfigError;
use crate::event::{EventHandle, EventKind, EventQueue};
use crate::metrics::{jain_index, utilization, FlowClass, QueueSampler};
use crate::packet::{FlowId, Packet};
use crate::rng::SimRng;
use crate::scenario::{DropCounts, FlowStats, RunResult, TcpDiag, TraceEvent};
use crate::topology::{build_dumbbell, Dumbbell, LinkId, Place};
use crate::transport::{AckOutcome, TcpConn, TcpParams, TcpSink, UdpSource};

/// EWMA weight for the reported queue-size series.
const SERIES_EWMA_W: f64 = 0.002;

/// Builds the bottleneck discipline from the scenario config. SFB draws its
/// hash seeds from the run RNG.
pub fn build_discipline(cfg: &ScenarioConfig, rng: &mut SimRng) -> Box<dyn QueueDiscipline> {
    let buffer = cfg.topology.buffer_pkts;
    let a = &cfg.aqm;
    let red = RedParams {
        w_q: a.w_q,
        min_th: a.min_th,
        max_th: a.max_th,
        max_p: a.max_p,
        idle_service_s: cfg.pkt_size_bytes as f64 * 8.0 / cfg.topology.bottleneck_bw_bps,
    };
    match a.kind {
        AqmKind::DropTail => Box::new(DropTailQueue::new(buffer)),
        AqmKind::Red => Box::new(RedQueue::new(red, buffer)),
        AqmKind::Fred => Box::new(FredQueue::new(
            FredParams {
                red,
                min_q: a.min_q,
            },
            buffer,
        )),
        AqmKind::Blue => Box::new(BlueQueue::new(
            BlueParams {
                d1: a.resolved_d1(),
                d2: a.resolved_d2(),
                freeze_time: a.resolved_freeze_time(),
            },
            buffer,
        )),
        AqmKind::Sfb => Box::new(SfbQueue::new(
            SfbParams {
                levels: a.levels,
                bins: a.bins,
                bin_size: a.resolved_bin_size(buffer),
                d1: a.resolved_d1(),
                d2: a.resolved_d2(),
                freeze_time: a.resolved_freeze_time(),
                boxtime: a.boxtime,
                boxtime_jitter: a.boxtime_jitter,
                hinterval: a.hinterval,
            },
            buffer,
            rng,
        )),
        AqmKind::Choke => {
            let variant = match a.variant {
                ChokeVariantKind::Basic => ChokeVariant::Basic,
                ChokeVariantKind::Multi => ChokeVariant::Multi(a.cand_num),
                ChokeVariantKind::Adaptive => ChokeVariant::Adaptive(a.interval_num),
            };
            Box::new(ChokeQueue::new(red, variant, buffer))
        }
    }
}

struct TcpFlow {
    conn: TcpConn,
    sink: TcpSink,
    rto_handle: Option<EventHandle>,
    cwnd_sum: f64,
    cwnd_samples: u64,
}

#[derive(Debug, Clone, Default)]
struct FlowCounters {
    sent: u64,
    delivered: u64,
    dropped: u64,
    delivered_window_bytes: u64,
    dropped_window: u64,
}

pub struct Engine {
    cfg: ScenarioConfig,
    queue: EventQueue,
    net: Dumbbell,
    tcp: Vec<TcpFlow>,
    udp: Vec<UdpSource>,
    rng: SimRng,
    sampler: QueueSampler,
    counters: Vec<FlowCounters>,
    drops_window: DropCounts,
    tick_interval: Option<f64>,
    trace: Vec<TraceEvent>,
}

impl Engine {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let mut rng = SimRng::new(cfg.seed);
        // Construction order is part of the deterministic RNG contract: the
        // discipline draws first (SFB hash seeds), events draw thereafter.
        let discipline = build_discipline(cfg, &mut rng);
        let tick_interval = discipline.tick_interval();
        let net = build_dumbbell(&cfg.topology, discipline)?;

        let n_tcp = cfg.topology.n_tcp;
        let n_flows = cfg.topology.n_flows();
        let tcp = (0..n_tcp)
            .map(|_| TcpFlow {
                conn: TcpConn::new(TcpParams {
                    max_window: cfg.tcp_window_pkts,
                    ..TcpParams::default()
                }),
                sink: TcpSink::new(),
                rto_handle: None,
                cwnd_sum: 0.0,
                cwnd_samples: 0,
            })
            .collect();
        // CBR sources start together at t = 0, like the periodic sources the
        // comparison baselines assume. Simultaneous arrivals then resolve by
        // flow order, which is what lets a fixed Boxtime capture one flow.
        let udp = (0..cfg.topology.n_udp)
            .map(|_| UdpSource::new(cfg.udp_rate_bps, cfg.pkt_size_bytes, 0.0))
            .collect();

        let mut engine = Engine {
            cfg: cfg.clone(),
            queue: EventQueue::new(),
            net,
            tcp,
            udp,
            rng,
            sampler: QueueSampler::new(n_tcp, n_flows, SERIES_EWMA_W, cfg.queue_sample_s),
            counters: vec![FlowCounters::default(); n_flows],
            drops_window: DropCounts::default(),
            tick_interval,
            trace: Vec::new(),
        };
        engine.schedule_initial_events();
        Ok(engine)
    }

    fn schedule_initial_events(&mut self) {
        for f in 0..self.tcp.len() {
            self.queue
                .schedule(0.0, EventKind::SourceWakeup { flow: f as FlowId });
        }
        for (u, src) in self.udp.iter().enumerate() {
            if src.rate_bps > 0.0 {
                let flow = (self.tcp.len() + u) as FlowId;
                self.queue
                    .schedule(src.phase_s, EventKind::SourceWakeup { flow });
            }
        }
        if let Some(iv) = self.tick_interval {
            self.queue.schedule(iv, EventKind::DisciplineTick);
        }
    }

    pub fn clock(&self) -> f64 {
        self.queue.clock()
    }

    fn is_tcp(&self, flow: FlowId) -> bool {
        (flow as usize) < self.tcp.len()
    }

    /// Processes every event up to and including `t_end`, returning the
    /// number of events handled.
    pub fn run_until(&mut self, t_end: f64) -> u64 {
        let mut processed = 0;
        while let Some(ev) = self.queue.pop_until(t_end) {
            self.dispatch(ev.time, ev.kind);
            processed += 1;
        }
        self.queue.finish_at(t_end);
        processed
    }

    fn dispatch(&mut self, t: f64, kind: EventKind) {
        match kind {
            EventKind::SourceWakeup { flow } => {
                if self.is_tcp(flow) {
                    self.tcp_send_permitted(flow, t);
                } else {
                    self.udp_emit(flow, t);
                }
            }
            EventKind::PacketArrival { place, pkt } => match self.net.route(place, &pkt) {
                Some(link) => self.offer(link, pkt, t),
                None => match place {
                    Place::Sink(f) => self.deliver(f, pkt, t),
                    Place::Source(f) => self.ack_arrival(f, pkt, t),
                    _ => unreachable!("gateways always forward"),
                },
            },
            EventKind::TransmissionComplete { link } => self.transmission_complete(link, t),
            EventKind::TimerExpiry { flow } => self.rto_fired(flow, t),
            EventKind::DisciplineTick => {
                let link = &mut self.net.links[self.net.bottleneck];
                link.discipline.on_tick(t, &mut self.rng);
                let iv = self.tick_interval.expect("tick without interval");
                self.queue.schedule(t + iv, EventKind::DisciplineTick);
            }
        }
    }

    /// Hands a packet to a link's queue and starts transmission if the link
    /// is idle.
    fn offer(&mut self, link_id: LinkId, pkt: Packet, t: f64) {
        let is_bn = link_id == self.net.bottleneck;
        let (flow, seq, is_ack) = (pkt.flow, pkt.seq, pkt.is_ack);
        let outcome = {
            let link = &mut self.net.links[link_id];
            // An arrival finding the link idle implies an empty queue; give
            // idle-driven disciplines their observation first.
            if !link.busy() && link.discipline.fifo().is_empty() {
                link.discipline.on_idle(t);
            }
            link.discipline.enqueue(pkt, t, &mut self.rng)
        };

        for victim in &outcome.victims {
            debug_assert!(is_bn, "victims only come from the bottleneck discipline");
            self.count_drop(victim.flow, DropReason::Matched, t);
            self.sampler.on_remove(victim.flow, t);
            if self.cfg.record_trace {
                self.trace.push(TraceEvent::BottleneckDrop {
                    t,
                    flow: victim.flow,
                    seq: victim.seq,
                    cause: DropReason::Matched,
                });
            }
        }

        match outcome.verdict {
            Verdict::Accepted => {
                if is_bn {
                    self.sampler.on_enqueue(flow, t);
                    if self.cfg.record_trace {
                        self.trace.push(TraceEvent::BottleneckEnqueue { t, flow, seq });
                    }
                }
                if !self.net.links[link_id].busy() {
                    self.start_transmission(link_id, t);
                }
            }
            Verdict::Dropped(cause) => {
                debug_assert!(!is_ack, "ample reverse buffers never drop ACKs");
                self.count_drop(flow, cause, t);
                if is_bn && self.cfg.record_trace {
                    self.trace.push(TraceEvent::BottleneckDrop { t, flow, seq, cause });
                }
            }
        }
    }

    fn count_drop(&mut self, flow: FlowId, cause: DropReason, t: f64) {
        let c = &mut self.counters[flow as usize];
        c.dropped += 1;
        if t > self.cfg.warmup_s {
            c.dropped_window += 1;
            self.drops_window.add(cause);
        }
    }

    fn start_transmission(&mut self, link_id: LinkId, t: f64) {
        debug_assert!(!self.net.links[link_id].busy());
        let pkt = match self.net.links[link_id].discipline.dequeue(t) {
            Some(p) => p,
            None => return,
        };
        if link_id == self.net.bottleneck {
            self.sampler.on_remove(pkt.flow, t);
            if self.cfg.record_trace {
                self.trace.push(TraceEvent::BottleneckDequeue {
                    t,
                    flow: pkt.flow,
                    seq: pkt.seq,
                });
            }
        }
        let service = self.net.links[link_id].service_time(&pkt);
        self.net.links[link_id].in_flight = Some(pkt);
        self.queue
            .schedule(t + service, EventKind::TransmissionComplete { link: link_id });
    }

    fn transmission_complete(&mut self, link_id: LinkId, t: f64) {
        let (pkt, prop, dst) = {
            let link = &mut self.net.links[link_id];
            let pkt = link.in_flight.take().expect("transmission without packet");
            (pkt, link.prop_delay_s, link.dst)
        };
        self.queue
            .schedule(t + prop, EventKind::PacketArrival { place: dst, pkt });
        if self.net.links[link_id].discipline.fifo().is_empty() {
            self.net.links[link_id].discipline.on_idle(t);
        } else {
            self.start_transmission(link_id, t);
        }
    }

    fn deliver(&mut self, flow: FlowId, pkt: Packet, t: f64) {
        debug_assert!(!pkt.is_ack, "data sinks only receive data");
        debug_assert_eq!(pkt.flow, flow);
        let c = &mut self.counters[flow as usize];
        c.delivered += 1;
        if t > self.cfg.warmup_s {
            c.delivered_window_bytes += pkt.size_bytes as u64;
        }
        if self.cfg.record_trace {
            self.trace.push(TraceEvent::Deliver { t, flow, seq: pkt.seq });
        }
        if self.is_tcp(flow) {
            let ack_seq = self.tcp[flow as usize].sink.on_data(pkt.seq);
            let ack = Packet::ack(flow, ack_seq, self.cfg.ack_size_bytes);
            self.offer(self.net.sink_access[flow as usize], ack, t);
        }
    }

    fn ack_arrival(&mut self, flow: FlowId, ack: Packet, t: f64) {
        debug_assert!(ack.is_ack);
        let outcome = self.tcp[flow as usize].conn.on_ack(ack.seq, t);
        match outcome {
            AckOutcome::New => {
                let f = &mut self.tcp[flow as usize];
                f.cwnd_sum += f.conn.cwnd;
                f.cwnd_samples += 1;
                self.tcp_send_permitted(flow, t);
                self.reset_rto(flow, t);
            }
            AckOutcome::Dup { retransmit } => {
                if let Some(seq) = retransmit {
                    self.tcp_retransmit(flow, seq, t);
                    self.reset_rto(flow, t);
                }
            }
            AckOutcome::Stale => {}
        }
    }

    /// Sends as many new packets as the window permits.
    fn tcp_send_permitted(&mut self, flow: FlowId, t: f64) {
        while self.tcp[flow as usize].conn.can_send() {
            let seq = self.tcp[flow as usize].conn.take_next_seq(t);
            self.tcp_send(flow, seq, t);
        }
    }

    fn tcp_send(&mut self, flow: FlowId, seq: u64, t: f64) {
        let pkt = Packet::data(flow, seq, self.cfg.pkt_size_bytes);
        self.counters[flow as usize].sent += 1;
        if self.cfg.record_trace {
            self.trace.push(TraceEvent::Send { t, flow, seq });
        }
        self.offer(self.net.src_access[flow as usize], pkt, t);
        if self.tcp[flow as usize].rto_handle.is_none() {
            self.arm_rto(flow, t);
        }
    }

    fn tcp_retransmit(&mut self, flow: FlowId, seq: u64, t: f64) {
        self.tcp[flow as usize].conn.note_retransmitted(seq, t);
        self.tcp_send(flow, seq, t);
    }

    fn arm_rto(&mut self, flow: FlowId, t: f64) {
        let rto = self.tcp[flow as usize].conn.rto();
        let handle = self.queue.schedule(t + rto, EventKind::TimerExpiry { flow });
        self.tcp[flow as usize].rto_handle = Some(handle);
    }

    fn reset_rto(&mut self, flow: FlowId, t: f64) {
        if let Some(h) = self.tcp[flow as usize].rto_handle.take() {
            self.queue.cancel(h);
        }
        if self.tcp[flow as usize].conn.outstanding() > 0 {
            self.arm_rto(flow, t);
        }
    }

    fn rto_fired(&mut self, flow: FlowId, t: f64) {
        self.tcp[flow as usize].rto_handle = None;
        if self.tcp[flow as usize].conn.outstanding() == 0 {
            return;
        }
        // The timeout rewinds the send pointer; the send loop then emits the
        // oldest unacknowledged packet under the collapsed window.
        let _ = self.tcp[flow as usize].conn.on_timeout();
        self.tcp_send_permitted(flow, t);
        if self.tcp[flow as usize].rto_handle.is_none() {
            self.arm_rto(flow, t);
        }
    }

    fn udp_emit(&mut self, flow: FlowId, t: f64) {
        let u = flow as usize - self.tcp.len();
        let seq = self.udp[u].next_seq;
        self.udp[u].next_seq += 1;
        let pkt = Packet::data(flow, seq, self.udp[u].pkt_size_bytes);
        self.counters[flow as usize].sent += 1;
        if self.cfg.record_trace {
            self.trace.push(TraceEvent::Send { t, flow, seq });
        }
        self.offer(self.net.src_access[flow as usize], pkt, t);
        let next = self.udp[u].departure_time(self.udp[u].next_seq);
        self.queue.schedule(next, EventKind::SourceWakeup { flow });
    }

    /// Data packets physically inside the network for `flow`: queued, being
    /// transmitted, or propagating.
    fn packets_in_network(&self, flow: FlowId) -> u64 {
        let mut n = 0u64;
        for link in &self.net.links {
            n += link
                .discipline
                .fifo()
                .iter()
                .filter(|p| !p.is_ack && p.flow == flow)
                .count() as u64;
            if let Some(p) = &link.in_flight {
                if !p.is_ack && p.flow == flow {
                    n += 1;
                }
            }
        }
        for (_, kind) in self.queue.pending() {
            if let EventKind::PacketArrival { pkt, .. } = kind {
                if !pkt.is_ack && pkt.flow == flow {
                    n += 1;
                }
            }
        }
        n
    }

    /// Per-flow conservation: every data packet sent is delivered, dropped,
    /// or still in the network.
    pub fn audit_conservation(&self) -> Result<(), String> {
        for flow in 0..self.counters.len() as FlowId {
            let c = &self.counters[flow as usize];
            let in_net = self.packets_in_network(flow);
            if c.sent != c.delivered + c.dropped + in_net {
                return Err(format!(
                    "flow {flow}: sent {} != delivered {} + dropped {} + in-network {in_net}",
                    c.sent, c.delivered, c.dropped
                ));
            }
        }
        Ok(())
    }

    /// Runs the scenario to completion and collects the results.
    pub fn run(mut self) -> RunResult {
        self.run_until(self.cfg.duration_s);
        debug_assert_eq!(self.audit_conservation(), Ok(()));
        self.sampler.finish(self.cfg.duration_s);

        let window = self.cfg.duration_s - self.cfg.warmup_s;
        let n_tcp = self.tcp.len();
        let flows: Vec<FlowStats> = self
            .counters
            .iter()
            .enumerate()
            .map(|(f, c)| FlowStats {
                flow_id: f as FlowId,
                class: if f < n_tcp { FlowClass::Tcp } else { FlowClass::Udp },
                delivered_bytes: c.delivered_window_bytes,
                dropped_pkts: c.dropped_window,
                throughput_bps: c.delivered_window_bytes as f64 * 8.0 / window,
            })
            .collect();

        let bw = self.cfg.topology.bottleneck_bw_bps;
        let total_bits = flows
            .iter()
            .fold(0.0, |acc, f| acc + f.delivered_bytes as f64 * 8.0);
        let udp_bits = flows
            .iter()
            .filter(|f| f.class == FlowClass::Udp)
            .fold(0.0, |acc, f| acc + f.delivered_bytes as f64 * 8.0);
        let tcp_throughputs: Vec<f64> = flows
            .iter()
            .filter(|f| f.class == FlowClass::Tcp)
            .map(|f| f.throughput_bps)
            .collect();

        let tcp_diag = self
            .tcp
            .iter()
            .map(|f| TcpDiag {
                final_cwnd: f.conn.cwnd,
                mean_cwnd: if f.cwnd_samples > 0 {
                    f.cwnd_sum / f.cwnd_samples as f64
                } else {
                    f.conn.cwnd
                },
            })
            .collect();

        RunResult {
            discipline: self.cfg.aqm.kind,
            flows,
            queue_rows: self.sampler.rows,
            utilization: utilization(total_bits, window, bw),
            jain_tcp: jain_index(&tcp_throughputs),
            udp_share: utilization(udp_bits, window, bw),
            drops_window: self.drops_window,
            tcp_diag,
            trace: self.trace,
        }
    }
}
