//! Experiment harness for the bidding lab: scenario files and presets,
//! seeded parallel replications, regret aggregation, bound audits and CSV
//! output. The learners and auctions live in `bidlab-core`.

pub mod audit;
pub mod cli;
pub mod config;
mod error;
pub mod harness;
pub mod io;
pub mod presets;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use harness::{run_replication, run_scenario, AggregateTrace, RegretTrace, ScenarioRun};
