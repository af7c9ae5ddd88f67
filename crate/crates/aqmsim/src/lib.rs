//! A deterministic discrete-event network simulator for comparing active
//! queue management disciplines (Drop Tail, RED, FRED, BLUE, SFB, CHOKe) on a
//! dumbbell topology shared by window-based TCP and constant-bit-rate UDP
//! flows.
//!
//! Identical `(config, seed)` pairs produce bit-identical results: one seeded
//! RNG per run, consumed in event order, with FIFO tie-breaking among
//! simultaneous events.

pub mod aqm;
pub mod config;
pub mod engine;
pub mod error;
pub mod event;
pub mod metrics;
pub mod output;
pub mod packet;
pub mod presets;
pub mod rng;
pub mod scenario;
pub mod topology;
pub mod transport;

pub use config::{AqmKind, ScenarioConfig};
pub use error::ConfigError;
pub use scenario::{run_scenario, sweep, RunResult};
