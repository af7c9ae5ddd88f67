//! Named experiment presets. Each preset expands to a list of runs with
//! deterministic per-run seeds; results collate into one summary table.

use crate::config::{AqmKind, ChokeVariantKind, ScenarioConfig, ALL_AQM_KINDS};
use crate::error::ConfigError;
use crate::rng::derive_seed;

pub const PRESET_NAMES: [&str; 12] = [
    "fig4",
    "fig5",
    "fig6",
    "table1",
    "blue-fig7",
    "blue-fig8",
    "sfb-fig9",
    "sfb-fig10",
    "boxtime-fig11",
    "choke-fig13",
    "choke-fig14",
    "choke-fig16",
];

/// One planned run of a preset.
#[derive(Debug, Clone)]
pub struct PlannedRun {
    pub run_id: String,
    /// Swept key and value, when the preset varies a single axis.
    pub axis: Option<(&'static str, f64)>,
    pub cfg: ScenarioConfig,
}

/// The shared 10 TCP + 1 UDP scenario: 1 Mbps bottleneck, 150-packet buffer,
/// thresholds 50/100, window 50.
fn standard_scenario() -> ScenarioConfig {
    ScenarioConfig::default()
}

/// The 49-TCP large-window scenario; KB figures map to packets at 1000 bytes.
/// The access links are widened so a 40 Mbps UDP source reaches the
/// bottleneck unshaped.
fn large_window_scenario(n_udp: usize, buffer_pkts: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.topology.n_tcp = 49;
    cfg.topology.n_udp = n_udp;
    cfg.topology.buffer_pkts = buffer_pkts;
    cfg.topology.access_bw_bps = 100e6;
    cfg.tcp_window_pkts = 300;
    cfg.udp_rate_bps = 40e6;
    cfg
}

fn seeded(mut cfg: ScenarioConfig, base_seed: u64, index: u64) -> ScenarioConfig {
    cfg.seed = derive_seed(base_seed, index);
    cfg
}

const MBPS: f64 = 1e6;

/// UDP-rate sweep points shared by the comparison presets.
const UDP_RATES_MBPS: [f64; 7] = [0.1, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0];

/// Expands a preset name into its planned runs.
pub fn preset(name: &str, base_seed: u64) -> Result<Vec<PlannedRun>, ConfigError> {
    let mut runs = Vec::new();
    match name {
        // UDP-rate sweep across all six disciplines.
        "fig4" => {
            let mut idx = 0;
            for kind in ALL_AQM_KINDS {
                for rate in UDP_RATES_MBPS {
                    let mut cfg = standard_scenario();
                    cfg.aqm.kind = kind;
                    cfg.udp_rate_bps = rate * MBPS;
                    runs.push(PlannedRun {
                        run_id: format!("fig4-{kind}-{rate}Mbps"),
                        axis: Some(("udp_rate_bps", rate * MBPS)),
                        cfg: seeded(cfg, base_seed, idx),
                    });
                    idx += 1;
                }
            }
        }
        // Queue-composition series for each discipline at UDP overload.
        "fig5" => {
            for (idx, kind) in ALL_AQM_KINDS.into_iter().enumerate() {
                let mut cfg = standard_scenario();
                cfg.aqm.kind = kind;
                cfg.udp_rate_bps = 8.0 * MBPS;
                runs.push(PlannedRun {
                    run_id: format!("fig5-{kind}"),
                    axis: None,
                    cfg: seeded(cfg, base_seed, idx as u64),
                });
            }
        }
        // FRED fairness vs buffer size. Thresholds scale with the buffer,
        // preserving the 150 -> 50/100 ratio (min_th = B/3, max_th = 2B/3).
        "fig6" => {
            let buffers = [20usize, 25, 30, 35, 40, 45, 60, 90, 120, 150];
            for (idx, buf) in buffers.into_iter().enumerate() {
                let mut cfg = standard_scenario();
                cfg.aqm.kind = AqmKind::Fred;
                cfg.udp_rate_bps = 8.0 * MBPS;
                cfg.topology.buffer_pkts = buf;
                cfg.aqm.min_th = buf as f64 / 3.0;
                cfg.aqm.max_th = 2.0 * buf as f64 / 3.0;
                runs.push(PlannedRun {
                    run_id: format!("fig6-buf{buf}"),
                    axis: Some(("topology.buffer_pkts", buf as f64)),
                    cfg: seeded(cfg, base_seed, idx as u64),
                });
            }
        }
        // FRED share vs bottleneck bandwidth. Access links stay ahead of the
        // bottleneck so the shared link keeps being the bottleneck.
        "table1" => {
            let bws = [0.5, 1.0, 2.0, 4.0, 8.0, 10.0, 20.0];
            for (idx, bw) in bws.into_iter().enumerate() {
                let mut cfg = standard_scenario();
                cfg.aqm.kind = AqmKind::Fred;
                cfg.udp_rate_bps = 2.0 * MBPS;
                cfg.topology.bottleneck_bw_bps = bw * MBPS;
                cfg.topology.access_bw_bps = (10.0 * MBPS).max(2.0 * bw * MBPS);
                runs.push(PlannedRun {
                    run_id: format!("table1-{bw}Mbps"),
                    axis: Some(("topology.bottleneck_bw_bps", bw * MBPS)),
                    cfg: seeded(cfg, base_seed, idx as u64),
                });
            }
        }
        // BLUE with TCP only: small standing queue, high utilization.
        "blue-fig7" => {
            let mut cfg = large_window_scenario(0, 300);
            cfg.aqm.kind = AqmKind::Blue;
            runs.push(PlannedRun {
                run_id: "blue-fig7".into(),
                axis: None,
                cfg: seeded(cfg, base_seed, 0),
            });
        }
        // BLUE with a 40 Mbps UDP flow joining: no flow discrimination.
        "blue-fig8" => {
            let mut cfg = large_window_scenario(1, 300);
            cfg.aqm.kind = AqmKind::Blue;
            runs.push(PlannedRun {
                run_id: "blue-fig8".into(),
                axis: None,
                cfg: seeded(cfg, base_seed, 0),
            });
        }
        "sfb-fig9" => {
            let mut cfg = large_window_scenario(0, 150);
            cfg.aqm.kind = AqmKind::Sfb;
            runs.push(PlannedRun {
                run_id: "sfb-fig9".into(),
                axis: None,
                cfg: seeded(cfg, base_seed, 0),
            });
        }
        // SFB detects and rate-limits the non-responsive flow.
        "sfb-fig10" => {
            let mut cfg = large_window_scenario(1, 150);
            cfg.aqm.kind = AqmKind::Sfb;
            runs.push(PlannedRun {
                run_id: "sfb-fig10".into(),
                axis: None,
                cfg: seeded(cfg, base_seed, 0),
            });
        }
        // Boxtime controls the bandwidth ceiling of rate-limited flows.
        "boxtime-fig11" => {
            let boxtimes = [0.02, 0.05, 0.5];
            for (idx, bt) in boxtimes.into_iter().enumerate() {
                let mut cfg = large_window_scenario(1, 150);
                cfg.aqm.kind = AqmKind::Sfb;
                cfg.aqm.boxtime = bt;
                runs.push(PlannedRun {
                    run_id: format!("boxtime-fig11-{bt}s"),
                    axis: Some(("aqm.boxtime", bt)),
                    cfg: seeded(cfg, base_seed, idx as u64),
                });
            }
        }
        // Candidate-count effect in M-CHOKe.
        "choke-fig13" => {
            let cands = [1u32, 2, 4, 8];
            for (idx, m) in cands.into_iter().enumerate() {
                let mut cfg = standard_scenario();
                cfg.aqm.kind = AqmKind::Choke;
                cfg.aqm.variant = ChokeVariantKind::Multi;
                cfg.aqm.cand_num = m;
                cfg.udp_rate_bps = 8.0 * MBPS;
                runs.push(PlannedRun {
                    run_id: format!("choke-fig13-m{m}"),
                    axis: Some(("aqm.cand_num", m as f64)),
                    cfg: seeded(cfg, base_seed, idx as u64),
                });
            }
        }
        // Region-count effect in A-CHOKe.
        "choke-fig14" => {
            let intervals = [1u32, 2, 5, 10];
            for (idx, k) in intervals.into_iter().enumerate() {
                let mut cfg = standard_scenario();
                cfg.aqm.kind = AqmKind::Choke;
                cfg.aqm.variant = ChokeVariantKind::Adaptive;
                cfg.aqm.interval_num = k;
                cfg.udp_rate_bps = 8.0 * MBPS;
                runs.push(PlannedRun {
                    run_id: format!("choke-fig14-k{k}"),
                    axis: Some(("aqm.interval_num", k as f64)),
                    cfg: seeded(cfg, base_seed, idx as u64),
                });
            }
        }
        // A-CHOKe under different TCP/UDP flow mixes.
        "choke-fig16" => {
            let mixes = [(1usize, 1usize), (10, 1), (10, 5)];
            for (idx, (n_tcp, n_udp)) in mixes.into_iter().enumerate() {
                let mut cfg = standard_scenario();
                cfg.aqm.kind = AqmKind::Choke;
                cfg.topology.n_tcp = n_tcp;
                cfg.topology.n_udp = n_udp;
                cfg.udp_rate_bps = 2.0 * MBPS;
                runs.push(PlannedRun {
                    run_id: format!("choke-fig16-t{n_tcp}-u{n_udp}"),
                    axis: None,
                    cfg: seeded(cfg, base_seed, idx as u64),
                });
            }
        }
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    }
    debug_assert!(!runs.is_empty());
    Ok(runs)
}
