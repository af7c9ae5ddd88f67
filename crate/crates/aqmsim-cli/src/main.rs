//! Command-line front end: run one scenario, sweep a parameter, or reproduce
//! a named experiment preset. Results land in CSV files.
//!
//! Exit codes: 0 success, 1 configuration error, 2 I/O error.
//! `AQMSIM_LOG=1` enables progress logging on stderr.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aqmsim::config::ScenarioConfig;
use aqmsim::error::ConfigError;
use aqmsim::output::{emit_csv, EmitRun};
use aqmsim::presets::{preset, PRESET_NAMES};
use aqmsim::scenario::{run_scenario, sweep, RunResult};

#[derive(Parser)]
#[command(name = "aqmsim", version, about = "Dumbbell-topology AQM simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a single scenario from a config file.
    Run {
        /// Scenario config (key = value lines).
        #[arg(long)]
        config: PathBuf,
        /// Override the queue discipline (droptail|red|fred|blue|sfb|choke).
        #[arg(long)]
        aqm: Option<String>,
        /// Override the RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Prefix for the emitted CSV files; omit to print the summary only.
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the config once per value of one numeric parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Config key to vary, e.g. `udp_rate_bps` or `aqm.boxtime`.
        #[arg(long)]
        axis: String,
        /// Comma-separated numeric values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: String,
    },
    /// Reproduce a named experiment preset.
    Preset {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: String,
    },
}

enum CliError {
    Config(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn verbose() -> bool {
    std::env::var("AQMSIM_LOG").is_ok_and(|v| !v.is_empty() && v != "0")
}

fn log(msg: &str) {
    if verbose() {
        eprintln!("aqmsim: {msg}");
    }
}

fn load_config(path: &PathBuf) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path)?;
    Ok(ScenarioConfig::parse(&text)?)
}

fn print_summary(run_id: &str, r: &RunResult) {
    println!(
        "{run_id}: discipline={} utilization={:.4} jain_tcp={} udp_share={:.4} \
         tcp={:.4}Mbps udp={:.4}Mbps drops(ovf/prob/match/rate)={}/{}/{}/{}",
        r.discipline,
        r.utilization,
        r.jain_tcp.map(|j| format!("{j:.4}")).unwrap_or_else(|| "-".into()),
        r.udp_share,
        r.tcp_aggregate_bps() / 1e6,
        r.udp_aggregate_bps() / 1e6,
        r.drops_window.overflow,
        r.drops_window.probabilistic,
        r.drops_window.matched,
        r.drops_window.rate_limited,
    );
}

fn cmd_run(
    config: PathBuf,
    aqm: Option<String>,
    seed: Option<u64>,
    out: Option<String>,
) -> Result<(), CliError> {
    let mut cfg = load_config(&config)?;
    if let Some(aqm) = aqm {
        cfg.set_key("aqm", &aqm)?;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    log(&format!("running {} for {} s", cfg.aqm.kind, cfg.duration_s));
    let result = run_scenario(&cfg)?;
    print_summary("run0", &result);
    if let Some(prefix) = out {
        let runs = [EmitRun {
            run_id: "run0".into(),
            axis_value: None,
            result: &result,
        }];
        for path in emit_csv(&runs, &prefix)? {
            log(&format!("wrote {}", path.display()));
        }
    }
    Ok(())
}

fn cmd_sweep(config: PathBuf, axis: String, values: String, out: String) -> Result<(), CliError> {
    let base = load_config(&config)?;
    let values: Vec<f64> = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError::invalid_value("--values", format!("bad number `{v}`")))
        })
        .collect::<Result<_, _>>()?;
    let points = sweep(&base, &axis, &values)?;
    let runs: Vec<EmitRun> = points
        .iter()
        .map(|p| EmitRun {
            run_id: format!("pt{}", p.index),
            axis_value: Some(p.axis_value),
            result: &p.result,
        })
        .collect();
    for (run, p) in runs.iter().zip(&points) {
        log(&format!("{} = {}", axis, p.axis_value));
        print_summary(&run.run_id, run.result);
    }
    for path in emit_csv(&runs, &out)? {
        log(&format!("wrote {}", path.display()));
    }
    Ok(())
}

fn cmd_preset(name: String, out: String) -> Result<(), CliError> {
    let planned = preset(&name, 1).map_err(|e| match e {
        ConfigError::UnknownPreset(p) => CliError::Config(format!(
            "unknown preset `{p}`; available: {}",
            PRESET_NAMES.join(", ")
        )),
        other => other.into(),
    })?;
    let mut results = Vec::with_capacity(planned.len());
    for run in &planned {
        log(&format!("running {}", run.run_id));
        results.push(run_scenario(&run.cfg)?);
    }
    let runs: Vec<EmitRun> = planned
        .iter()
        .zip(&results)
        .map(|(p, r)| EmitRun {
            run_id: p.run_id.clone(),
            axis_value: p.axis.map(|(_, v)| v),
            result: r,
        })
        .collect();
    for run in &runs {
        print_summary(&run.run_id, run.result);
    }
    for path in emit_csv(&runs, &out)? {
        log(&format!("wrote {}", path.display()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.cmd {
        Cmd::Run {
            config,
            aqm,
            seed,
            out,
        } => cmd_run(config, aqm, seed, out),
        Cmd::Sweep {
            config,
            axis,
            values,
            out,
        } => cmd_sweep(config, axis, values, out),
        Cmd::Preset { name, out } => cmd_preset(name, out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aqmsim: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(1),
                CliError::Io(_) => ExitCode::from(2),
            }
        }
    }
}
