//! Runs the shared 10 TCP + 1 UDP scenario under all six disciplines and
//! prints a comparison table.
//!
//!     cargo run --release --example compare -- <udp_rate_mbps>

use aqmsim::config::{ScenarioConfig, ALL_AQM_KINDS};
use aqmsim::run_scenario;

fn main() {
    let rate_mbps: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(8.0);
    println!("UDP rate {rate_mbps} Mbps on a 1 Mbps bottleneck, 10 TCP flows\n");
    println!(
        "{:<10} {:>6} {:>10} {:>10} {:>10} {:>10}",
        "aqm", "util", "jain_tcp", "udp_share", "tcp_mbps", "queue_pkts"
    );
    for kind in ALL_AQM_KINDS {
        let mut cfg = ScenarioConfig::default();
        cfg.aqm.kind = kind;
        cfg.udp_rate_bps = rate_mbps * 1e6;
        let r = run_scenario(&cfg).expect("default scenario is valid");
        println!(
            "{:<10} {:>6.3} {:>10} {:>10.3} {:>10.3} {:>10.1}",
            kind.as_str(),
            r.utilization,
            r.jain_tcp.map(|j| format!("{j:.3}")).unwrap_or_else(|| "-".into()),
            r.udp_share,
            r.tcp_aggregate_bps() / 1e6,
            r.mean_ewma_queue_after(10.0),
        );
    }
}
