//! Running scenarios and parameter sweeps.

use crate::aqm::DropReason;
use crate::config::{AqmKind, ScenarioConfig};
use crate::engine::Engine;
use crate::error::ConfigError;
use crate::metrics::{FlowClass, QueueRow};
use crate::packet::FlowId;
use crate::rng::derive_seed;

/// Per-flow outcome over the measurement window (warm-up excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowStats {
    pub flow_id: FlowId,
    pub class: FlowClass,
    pub delivered_bytes: u64,
    pub dropped_pkts: u64,
    pub throughput_bps: f64,
}

/// Drop counts by cause over the measurement window, all links.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropCounts {
    pub overflow: u64,
    pub probabilistic: u64,
    pub matched: u64,
    pub rate_limited: u64,
}

impl DropCounts {
    pub fn add(&mut self, cause: DropReason) {
        match cause {
            DropReason::Overflow => self.overflow += 1,
            DropReason::Probabilistic => self.probabilistic += 1,
            DropReason::Matched => self.matched += 1,
            DropReason::RateLimited => self.rate_limited += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.overflow + self.probabilistic + self.matched + self.rate_limited
    }
}

/// Event log of one run, populated when `record_trace` is set.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    /// A source emitted a data packet (including retransmissions).
    Send { t: f64, flow: FlowId, seq: u64 },
    BottleneckEnqueue { t: f64, flow: FlowId, seq: u64 },
    BottleneckDrop { t: f64, flow: FlowId, seq: u64, cause: DropReason },
    BottleneckDequeue { t: f64, flow: FlowId, seq: u64 },
    /// A data packet reached its sink.
    Deliver { t: f64, flow: FlowId, seq: u64 },
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub discipline: AqmKind,
    pub flows: Vec<FlowStats>,
    /// Bottleneck queue EWMA series on the sampling grid.
    pub queue_rows: Vec<QueueRow>,
    pub utilization: f64,
    /// Jain index over the TCP flows' throughputs; `None` without TCP traffic.
    pub jain_tcp: Option<f64>,
    /// UDP aggregate share of the bottleneck capacity.
    pub udp_share: f64,
    pub drops_window: DropCounts,
    pub tcp_diag: Vec<TcpDiag>,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcpDiag {
    pub final_cwnd: f64,
    pub mean_cwnd: f64,
}

impl RunResult {
    pub fn tcp_aggregate_bps(&self) -> f64 {
        // fold from +0.0: an empty `sum()` would yield -0.0
        self.flows
            .iter()
            .filter(|f| f.class == FlowClass::Tcp)
            .fold(0.0, |acc, f| acc + f.throughput_bps)
    }

    pub fn udp_aggregate_bps(&self) -> f64 {
        self.flows
            .iter()
            .filter(|f| f.class == FlowClass::Udp)
            .fold(0.0, |acc, f| acc + f.throughput_bps)
    }

    /// Time average of the post-warm-up EWMA total queue.
    pub fn mean_ewma_queue_after(&self, warmup_s: f64) -> f64 {
        let rows: Vec<&QueueRow> = self.queue_rows.iter().filter(|r| r.t > warmup_s).collect();
        if rows.is_empty() {
            return 0.0;
        }
        rows.iter().map(|r| r.total).sum::<f64>() / rows.len() as f64
    }
}

/// Runs one scenario to completion. Deterministic in `(config, seed)`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunResult, ConfigError> {
    Ok(Engine::new(cfg)?.run())
}

/// One point of a sweep: the varied key, its value, and the run output.
#[derive(Debug)]
pub struct SweepPoint {
    pub index: usize,
    pub axis_value: f64,
    pub cfg: ScenarioConfig,
    pub result: RunResult,
}

/// Runs `base` once per axis value. Each point gets an independent seed
/// derived from the base seed and its index, so results do not depend on
/// execution order or on which other points exist.
pub fn sweep(
    base: &ScenarioConfig,
    axis: &str,
    values: &[f64],
) -> Result<Vec<SweepPoint>, ConfigError> {
    if values.is_empty() {
        return Err(ConfigError::Invalid("sweep needs at least one value".into()));
    }
    let mut points = Vec::with_capacity(values.len());
    for (index, &value) in values.iter().enumerate() {
        let mut cfg = base.clone();
        cfg.set_key(axis, &format_value(value))?;
        cfg.seed = derive_seed(base.seed, index as u64);
        let result = run_scenario(&cfg)?;
        points.push(SweepPoint {
            index,
            axis_value: value,
            cfg,
            result,
        });
    }
    Ok(points)
}

/// Formats an axis value so integer-valued keys parse back losslessly.
pub fn format_value(v: f64) -> String {
    format!("{v}")
}
