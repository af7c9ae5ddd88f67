//! CSV emission. Three files per invocation, stable column order, LF line
//! endings, fixed float formatting so identical results emit identical bytes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::scenario::{format_value, RunResult};

/// One run to emit, tagged with its identifier and optional sweep-axis value.
pub struct EmitRun<'a> {
    pub run_id: String,
    pub axis_value: Option<f64>,
    pub result: &'a RunResult,
}

fn fmt_axis(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

pub fn render_flows_csv(runs: &[EmitRun<'_>]) -> String {
    let mut flows = String::from("run_id,flow_id,class,delivered_bytes,dropped,throughput_bps\n");
    for run in runs {
        for f in &run.result.flows {
            flows.push_str(&format!(
                "{},{},{},{},{},{:.3}\n",
                run.run_id,
                f.flow_id,
                f.class.as_str(),
                f.delivered_bytes,
                f.dropped_pkts,
                f.throughput_bps
            ));
        }
    }
    flows
}

pub fn render_queues_csv(runs: &[EmitRun<'_>]) -> String {
    let mut queues = String::from("run_id,t,class,ewma_len_pkts\n");
    for run in runs {
        for row in &run.result.queue_rows {
            queues.push_str(&format!(
                "{},{:.1},total,{:.4}\n{},{:.1},tcp,{:.4}\n{},{:.1},udp,{:.4}\n",
                run.run_id, row.t, row.total, run.run_id, row.t, row.tcp, run.run_id, row.t, row.udp
            ));
            for (f, v) in row.per_flow.iter().enumerate() {
                queues.push_str(&format!("{},{:.1},flow{},{:.4}\n", run.run_id, row.t, f, v));
            }
        }
    }
    queues
}

pub fn render_summary_csv(runs: &[EmitRun<'_>]) -> String {
    let mut summary = String::from("run_id,axis,discipline,utilization,jain_tcp,udp_share\n");
    for run in runs {
        let r = run.result;
        summary.push_str(&format!(
            "{},{},{},{:.6},{},{:.6}\n",
            run.run_id,
            fmt_axis(run.axis_value),
            r.discipline,
            r.utilization,
            r.jain_tcp.map(|j| format!("{j:.6}")).unwrap_or_default(),
            r.udp_share
        ));
    }
    summary
}

/// Writes `<prefix>flows.csv`, `<prefix>queues.csv` and `<prefix>summary.csv`.
pub fn emit_csv(runs: &[EmitRun<'_>], prefix: &str) -> io::Result<Vec<PathBuf>> {
    if let Some(parent) = Path::new(&format!("{prefix}summary.csv")).parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let paths = vec![
        PathBuf::from(format!("{prefix}flows.csv")),
        PathBuf::from(format!("{prefix}queues.csv")),
        PathBuf::from(format!("{prefix}summary.csv")),
    ];
    fs::write(&paths[0], render_flows_csv(runs))?;
    fs::write(&paths[1], render_queues_csv(runs))?;
    fs::write(&paths[2], render_summary_csv(runs))?;
    Ok(paths)
}
