//! Scenario configuration: a flat `key = value` text format with dotted
//! sections. Discipline parameters keep their conventional symbol names
//! (`w_q`, `min_th`, `d1`, `Boxtime`, ...) so a config diff reads like a
//! parameter table.

use std::fmt;
use std::str::FromStr;

use crate::error::ConfigError;
use crate::topology::DumbbellTopology;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AqmKind {
    DropTail,
    Red,
    Fred,
    Blue,
    Sfb,
    Choke,
}

pub const ALL_AQM_KINDS: [AqmKind; 6] = [
    AqmKind::DropTail,
    AqmKind::Red,
    AqmKind::Fred,
    AqmKind::Blue,
    AqmKind::Sfb,
    AqmKind::Choke,
];

impl AqmKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AqmKind::DropTail => "droptail",
            AqmKind::Red => "red",
            AqmKind::Fred => "fred",
            AqmKind::Blue => "blue",
            AqmKind::Sfb => "sfb",
            AqmKind::Choke => "choke",
        }
    }

    /// Whether the discipline uses the RED threshold machinery.
    pub fn uses_red_thresholds(&self) -> bool {
        matches!(self, AqmKind::Red | AqmKind::Fred | AqmKind::Choke)
    }
}

impl fmt::Display for AqmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AqmKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "droptail" => Ok(AqmKind::DropTail),
            "red" => Ok(AqmKind::Red),
            "fred" => Ok(AqmKind::Fred),
            "blue" => Ok(AqmKind::Blue),
            "sfb" => Ok(AqmKind::Sfb),
            "choke" => Ok(AqmKind::Choke),
            other => Err(ConfigError::UnknownDiscipline(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChokeVariantKind {
    Basic,
    Multi,
    Adaptive,
}

impl ChokeVariantKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChokeVariantKind::Basic => "basic",
            ChokeVariantKind::Multi => "multi",
            ChokeVariantKind::Adaptive => "adaptive",
        }
    }
}

impl FromStr for ChokeVariantKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "basic" => Ok(ChokeVariantKind::Basic),
            "multi" => Ok(ChokeVariantKind::Multi),
            "adaptive" => Ok(ChokeVariantKind::Adaptive),
            other => Err(ConfigError::invalid_value(
                "aqm.variant",
                format!("expected basic|multi|adaptive, got `{other}`"),
            )),
        }
    }
}

/// Every discipline parameter, with the shared defaults filled in.
/// `d1`/`d2`/`freeze_time`/`bin_size` default per discipline and stay unset
/// here unless configured explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct AqmConfig {
    pub kind: AqmKind,
    pub w_q: f64,
    pub min_th: f64,
    pub max_th: f64,
    pub max_p: f64,
    pub min_q: f64,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub freeze_time: Option<f64>,
    /// Bins per level (N).
    pub bins: usize,
    /// Levels (L).
    pub levels: usize,
    pub bin_size: Option<f64>,
    pub boxtime: f64,
    pub boxtime_jitter: f64,
    pub hinterval: f64,
    pub variant: ChokeVariantKind,
    pub cand_num: u32,
    pub interval_num: u32,
}

impl Default for AqmConfig {
    fn default() -> Self {
        AqmConfig {
            kind: AqmKind::DropTail,
            w_q: 0.002,
            min_th: 50.0,
            max_th: 100.0,
            max_p: 0.02,
            min_q: 2.0,
            d1: None,
            d2: None,
            freeze_time: None,
            bins: 23,
            levels: 2,
            bin_size: None,
            boxtime: 0.05,
            boxtime_jitter: 0.0,
            hinterval: 5.0,
            variant: ChokeVariantKind::Adaptive,
            cand_num: 1,
            interval_num: 5,
        }
    }
}

impl AqmConfig {
    /// BLUE and SFB share symbols but not defaults.
    pub fn resolved_d1(&self) -> f64 {
        self.d1.unwrap_or(match self.kind {
            AqmKind::Sfb => 0.005,
            _ => 0.02,
        })
    }

    pub fn resolved_d2(&self) -> f64 {
        self.d2.unwrap_or(match self.kind {
            AqmKind::Sfb => 0.001,
            _ => 0.002,
        })
    }

    pub fn resolved_freeze_time(&self) -> f64 {
        self.freeze_time.unwrap_or(match self.kind {
            AqmKind::Sfb => 0.001,
            _ => 0.01,
        })
    }

    pub fn resolved_bin_size(&self, buffer_pkts: usize) -> f64 {
        self.bin_size
            .unwrap_or(1.5 / self.bins as f64 * buffer_pkts as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub aqm: AqmConfig,
    pub topology: DumbbellTopology,
    /// Sending rate of each UDP flow.
    pub udp_rate_bps: f64,
    pub tcp_window_pkts: u32,
    pub pkt_size_bytes: u32,
    pub ack_size_bytes: u32,
    pub duration_s: f64,
    pub warmup_s: f64,
    pub seed: u64,
    /// Queue series output granularity.
    pub queue_sample_s: f64,
    /// Record a full enqueue/drop/deliver trace in the result (test aid, not
    /// part of the serialized config).
    pub record_trace: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            aqm: AqmConfig::default(),
            topology: DumbbellTopology::default(),
            udp_rate_bps: 2e6,
            tcp_window_pkts: 50,
            pkt_size_bytes: 1000,
            ack_size_bytes: 40,
            duration_s: 100.0,
            warmup_s: 10.0,
            seed: 1,
            queue_sample_s: 0.1,
            record_trace: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, val: &str) -> Result<T, ConfigError> {
    val.parse::<T>()
        .map_err(|_| ConfigError::invalid_value(key, format!("cannot parse `{val}`")))
}

impl ScenarioConfig {
    /// Applies one `key = value` assignment. Sweeps use this to vary any
    /// numeric key.
    pub fn set_key(&mut self, key: &str, val: &str) -> Result<(), ConfigError> {
        match key {
            "seed" => self.seed = parse_num(key, val)?,
            "duration_s" => self.duration_s = parse_num(key, val)?,
            "warmup_s" => self.warmup_s = parse_num(key, val)?,
            "n_tcp" => self.topology.n_tcp = parse_num(key, val)?,
            "n_udp" => self.topology.n_udp = parse_num(key, val)?,
            "udp_rate_bps" => self.udp_rate_bps = parse_num(key, val)?,
            "tcp_window_pkts" => self.tcp_window_pkts = parse_num(key, val)?,
            "pkt_size_bytes" => self.pkt_size_bytes = parse_num(key, val)?,
            "ack_size_bytes" => self.ack_size_bytes = parse_num(key, val)?,
            "queue_sample_s" => self.queue_sample_s = parse_num(key, val)?,
            "topology.bottleneck_bw_bps" => self.topology.bottleneck_bw_bps = parse_num(key, val)?,
            "topology.bottleneck_delay_s" => {
                self.topology.bottleneck_delay_s = parse_num(key, val)?
            }
            "topology.access_bw_bps" => self.topology.access_bw_bps = parse_num(key, val)?,
            "topology.access_delay_s" => self.topology.access_delay_s = parse_num(key, val)?,
            "topology.buffer_pkts" => self.topology.buffer_pkts = parse_num(key, val)?,
            "aqm" => self.aqm.kind = val.parse()?,
            "aqm.w_q" => self.aqm.w_q = parse_num(key, val)?,
            "aqm.min_th" => self.aqm.min_th = parse_num(key, val)?,
            "aqm.max_th" => self.aqm.max_th = parse_num(key, val)?,
            "aqm.max_p" => self.aqm.max_p = parse_num(key, val)?,
            "aqm.min_q" => self.aqm.min_q = parse_num(key, val)?,
            "aqm.d1" => self.aqm.d1 = Some(parse_num(key, val)?),
            "aqm.d2" => self.aqm.d2 = Some(parse_num(key, val)?),
            "aqm.freeze_time" => self.aqm.freeze_time = Some(parse_num(key, val)?),
            "aqm.N" => self.aqm.bins = parse_num(key, val)?,
            "aqm.L" => self.aqm.levels = parse_num(key, val)?,
            "aqm.bin_size" => self.aqm.bin_size = Some(parse_num(key, val)?),
            "aqm.boxtime" => self.aqm.boxtime = parse_num(key, val)?,
            "aqm.boxtime_jitter" => self.aqm.boxtime_jitter = parse_num(key, val)?,
            "aqm.hinterval" => self.aqm.hinterval = parse_num(key, val)?,
            "aqm.variant" => self.aqm.variant = val.parse()?,
            "aqm.cand_num" => self.aqm.cand_num = parse_num(key, val)?,
            "aqm.interval_num" => self.aqm.interval_num = parse_num(key, val)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Parses the flat text format: one `key = value` per line, `#` comments.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, val) = line.split_once('=').ok_or_else(|| {
                ConfigError::Invalid(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set_key(key.trim(), val.trim())?;
        }
        Ok(cfg)
    }

    /// Serializes to the same text format, in a fixed key order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let t = &self.topology;
        let a = &self.aqm;
        use std::fmt::Write;
        let _ = write!(
            s,
            "seed = {}\nduration_s = {}\nwarmup_s = {}\n\
             n_tcp = {}\nn_udp = {}\nudp_rate_bps = {}\ntcp_window_pkts = {}\n\
             pkt_size_bytes = {}\nack_size_bytes = {}\nqueue_sample_s = {}\n\
             topology.bottleneck_bw_bps = {}\ntopology.bottleneck_delay_s = {}\n\
             topology.access_bw_bps = {}\ntopology.access_delay_s = {}\n\
             topology.buffer_pkts = {}\n",
            self.seed,
            self.duration_s,
            self.warmup_s,
            t.n_tcp,
            t.n_udp,
            self.udp_rate_bps,
            self.tcp_window_pkts,
            self.pkt_size_bytes,
            self.ack_size_bytes,
            self.queue_sample_s,
            t.bottleneck_bw_bps,
            t.bottleneck_delay_s,
            t.access_bw_bps,
            t.access_delay_s,
            t.buffer_pkts,
        );
        let _ = write!(
            s,
            "aqm = {}\naqm.w_q = {}\naqm.min_th = {}\naqm.max_th = {}\naqm.max_p = {}\n\
             aqm.min_q = {}\naqm.N = {}\naqm.L = {}\naqm.boxtime = {}\n\
             aqm.boxtime_jitter = {}\naqm.hinterval = {}\naqm.variant = {}\n\
             aqm.cand_num = {}\naqm.interval_num = {}\n",
            a.kind,
            a.w_q,
            a.min_th,
            a.max_th,
            a.max_p,
            a.min_q,
            a.bins,
            a.levels,
            a.boxtime,
            a.boxtime_jitter,
            a.hinterval,
            a.variant.as_str(),
            a.cand_num,
            a.interval_num,
        );
        if let Some(v) = a.d1 {
            let _ = writeln!(s, "aqm.d1 = {v}");
        }
        if let Some(v) = a.d2 {
            let _ = writeln!(s, "aqm.d2 = {v}");
        }
        if let Some(v) = a.freeze_time {
            let _ = writeln!(s, "aqm.freeze_time = {v}");
        }
        if let Some(v) = a.bin_size {
            let _ = writeln!(s, "aqm.bin_size = {v}");
        }
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.topology.validate()?;
        // Parsed floats can be NaN or infinite; reject those up front so the
        // comparisons below mean what they say.
        for (key, v) in [
            ("duration_s", self.duration_s),
            ("warmup_s", self.warmup_s),
            ("udp_rate_bps", self.udp_rate_bps),
            ("queue_sample_s", self.queue_sample_s),
            ("topology.bottleneck_delay_s", self.topology.bottleneck_delay_s),
            ("topology.access_delay_s", self.topology.access_delay_s),
            ("aqm.w_q", self.aqm.w_q),
            ("aqm.min_th", self.aqm.min_th),
            ("aqm.max_th", self.aqm.max_th),
            ("aqm.max_p", self.aqm.max_p),
            ("aqm.min_q", self.aqm.min_q),
            ("aqm.boxtime", self.aqm.boxtime),
            ("aqm.boxtime_jitter", self.aqm.boxtime_jitter),
            ("aqm.hinterval", self.aqm.hinterval),
        ] {
            if !v.is_finite() {
                return Err(ConfigError::invalid_value(key, "must be finite"));
            }
        }
        if self.duration_s <= self.warmup_s || self.warmup_s < 0.0 {
            return Err(ConfigError::Invalid(format!(
                "need duration_s > warmup_s >= 0, got {} / {}",
                self.duration_s, self.warmup_s
            )));
        }
        if self.pkt_size_bytes == 0 || self.ack_size_bytes == 0 {
            return Err(ConfigError::Invalid("packet sizes must be positive".into()));
        }
        if self.tcp_window_pkts == 0 {
            return Err(ConfigError::invalid_value("tcp_window_pkts", "must be >= 1"));
        }
        if self.queue_sample_s <= 0.0 {
            return Err(ConfigError::invalid_value("queue_sample_s", "must be > 0"));
        }
        if self.udp_rate_bps < 0.0 {
            return Err(ConfigError::invalid_value("udp_rate_bps", "must be >= 0"));
        }
        let a = &self.aqm;
        if !(a.w_q > 0.0 && a.w_q <= 1.0) {
            return Err(ConfigError::invalid_value("aqm.w_q", "must be in (0, 1]"));
        }
        if a.kind.uses_red_thresholds() {
            if !(a.min_th >= 0.0 && a.min_th < a.max_th) {
                return Err(ConfigError::invalid_value(
                    "aqm.min_th",
                    "need 0 <= min_th < max_th",
                ));
            }
            if a.max_th > self.topology.buffer_pkts as f64 {
                return Err(ConfigError::invalid_value(
                    "aqm.max_th",
                    format!("max_th must not exceed buffer_pkts = {}", self.topology.buffer_pkts),
                ));
            }
            if !(a.max_p > 0.0 && a.max_p <= 1.0) {
                return Err(ConfigError::invalid_value("aqm.max_p", "must be in (0, 1]"));
            }
        }
        if a.kind == AqmKind::Sfb {
            if a.bins == 0 || a.levels == 0 {
                return Err(ConfigError::invalid_value("aqm.N", "N and L must be >= 1"));
            }
            if a.boxtime <= 0.0 {
                return Err(ConfigError::invalid_value("aqm.boxtime", "must be > 0"));
            }
            if !(0.0..=1.0).contains(&a.boxtime_jitter) {
                return Err(ConfigError::invalid_value(
                    "aqm.boxtime_jitter",
                    "must be in [0, 1]",
                ));
            }
            if a.hinterval < 0.0 {
                return Err(ConfigError::invalid_value("aqm.hinterval", "must be >= 0"));
            }
        }
        if a.kind == AqmKind::Choke {
            if a.cand_num == 0 {
                return Err(ConfigError::invalid_value("aqm.cand_num", "must be >= 1"));
            }
            if a.interval_num == 0 {
                return Err(ConfigError::invalid_value("aqm.interval_num", "must be >= 1"));
            }
        }
        for (key, v) in [
            ("aqm.d1", a.d1),
            ("aqm.d2", a.d2),
            ("aqm.freeze_time", a.freeze_time),
            ("aqm.bin_size", a.bin_size),
        ] {
            if let Some(v) = v {
                if v <= 0.0 {
                    return Err(ConfigError::invalid_value(key, "must be > 0"));
                }
            }
        }
        Ok(())
    }
}
