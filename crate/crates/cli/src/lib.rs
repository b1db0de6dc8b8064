//! Command-line surface for the sensor-management library: scenario file
//! ingestion, the `simulate` / `geodesic` / `fisher-check` /
//! `divergence-check` subcommands, CSV trace emission and SVG plotting.

pub mod csvout;
pub mod runner;
pub mod scenario;
pub mod svg;

pub use runner::{
    run_divergence_check, run_fisher_check, run_geodesic, run_simulate, CliError, GlobalOpts,
};
pub use scenario::{load_scenario, parse_scenario, serialize_scenario, ScenarioError, ScenarioFile};
