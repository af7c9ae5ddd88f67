//! Measurement: per-flow throughput, EWMA queue-occupancy series, link
//! utilization, Jain's fairness index.

use crate::packet::FlowId;

/// One EWMA step: `(1 - w) * prev + w * sample`.
pub fn ewma_step(prev: f64, sample: f64, w: f64) -> f64 {
    debug_assert!(w > 0.0 && w <= 1.0);
    (1.0 - w) * prev + w * sample
}

/// Jain's fairness index `(sum x)^2 / (n * sum x^2)`. `None` for an empty or
/// all-zero input, where the index is undefined.
pub fn jain_index(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let sum: f64 = xs.iter().sum();
    let sq_sum: f64 = xs.iter().map(|x| x * x).sum();
    if sq_sum <= 0.0 {
        return None;
    }
    Some(sum * sum / (xs.len() as f64 * sq_sum))
}

/// Fraction of the bottleneck capacity actually delivered over the window.
pub fn utilization(delivered_bits: f64, window_s: f64, bottleneck_bps: f64) -> f64 {
    debug_assert!(window_s > 0.0);
    delivered_bits / (bottleneck_bps * window_s)
}

/// Traffic class of a queue series or flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowClass {
    Tcp,
    Udp,
}

impl FlowClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlowClass::Tcp => "tcp",
            FlowClass::Udp => "udp",
        }
    }
}

/// One downsampled row of the bottleneck queue-occupancy series.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueRow {
    pub t: f64,
    pub total: f64,
    pub tcp: f64,
    pub udp: f64,
    pub per_flow: Vec<f64>,
}

/// Tracks EWMA queue occupancy (total, per class, per flow) at the bottleneck
/// and emits rows on a fixed time grid.
#[derive(Debug, Clone)]
pub struct QueueSampler {
    w: f64,
    period_s: f64,
    next_row_t: f64,
    n_tcp: usize,
    flow_counts: Vec<usize>,
    total_count: usize,
    ewma_total: f64,
    ewma_tcp: f64,
    ewma_udp: f64,
    ewma_flow: Vec<f64>,
    pub rows: Vec<QueueRow>,
    raw_min: f64,
    raw_max: f64,
}

impl QueueSampler {
    pub fn new(n_tcp: usize, n_flows: usize, w: f64, period_s: f64) -> Self {
        QueueSampler {
            w,
            period_s,
            next_row_t: 0.0,
            n_tcp,
            flow_counts: vec![0; n_flows],
            total_count: 0,
            ewma_total: 0.0,
            ewma_tcp: 0.0,
            ewma_udp: 0.0,
            ewma_flow: vec![0.0; n_flows],
            rows: Vec::new(),
            raw_min: 0.0,
            raw_max: 0.0,
        }
    }

    pub fn total_count(&self) -> usize {
        self.total_count
    }

    pub fn flow_count(&self, flow: FlowId) -> usize {
        self.flow_counts[flow as usize]
    }

    /// Bounds of every raw total sample observed so far.
    pub fn raw_bounds(&self) -> (f64, f64) {
        (self.raw_min, self.raw_max)
    }

    fn flush_rows_until(&mut self, t: f64) {
        while self.next_row_t <= t {
            self.rows.push(QueueRow {
                t: self.next_row_t,
                total: self.ewma_total,
                tcp: self.ewma_tcp,
                udp: self.ewma_udp,
                per_flow: self.ewma_flow.clone(),
            });
            self.next_row_t += self.period_s;
        }
    }

    fn resample(&mut self, t: f64) {
        self.flush_rows_until(t);
        let (mut tcp, mut udp) = (0usize, 0usize);
        for (f, &c) in self.flow_counts.iter().enumerate() {
            if f < self.n_tcp {
                tcp += c;
            } else {
                udp += c;
            }
        }
        // The classes partition the queue: raw values must add up exactly.
        debug_assert_eq!(tcp + udp, self.total_count);
        self.ewma_total = ewma_step(self.ewma_total, self.total_count as f64, self.w);
        self.ewma_tcp = ewma_step(self.ewma_tcp, tcp as f64, self.w);
        self.ewma_udp = ewma_step(self.ewma_udp, udp as f64, self.w);
        for (f, e) in self.ewma_flow.iter_mut().enumerate() {
            *e = ewma_step(*e, self.flow_counts[f] as f64, self.w);
        }
        self.raw_min = self.raw_min.min(self.total_count as f64);
        self.raw_max = self.raw_max.max(self.total_count as f64);
    }

    /// A packet of `flow` was accepted into the bottleneck queue.
    pub fn on_enqueue(&mut self, flow: FlowId, t: f64) {
        self.flow_counts[flow as usize] += 1;
        self.total_count += 1;
        self.resample(t);
    }

    /// A packet of `flow` left the queue (service start or CHOKe victim).
    pub fn on_remove(&mut self, flow: FlowId, t: f64) {
        debug_assert!(self.flow_counts[flow as usize] > 0);
        self.flow_counts[flow as usize] -= 1;
        self.total_count -= 1;
        self.resample(t);
    }

    /// Emits any remaining grid rows up to the end of the run.
    pub fn finish(&mut self, t_end: f64) {
        self.flush_rows_until(t_end);
    }
}
