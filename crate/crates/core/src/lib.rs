//! Trace-driven discrete-event simulator for rack-scale disaggregated memory.
//!
//! Compute nodes with small local memories share remote memory pools behind
//! a top-of-rack switch. A time-ordered LLC-miss trace is replayed through
//! per-node page mapping, the rack fabric and DRAM timing models, and every
//! access is reported with its latency breakdown.

pub mod addrmap;
pub mod config;
pub mod dram;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod fabric;
pub mod frontend;
pub mod gmm;
pub mod metrics;
pub mod time;
pub mod trace;

pub use config::RunConfig;
pub use engine::{run, SimConfig, Simulation};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use time::Ps;
