//! Scenario simulation and end-to-end filter runs.

pub mod config;
pub mod run;
pub mod scenario;
pub mod verify;

pub use config::{Scenario, ScenarioConfig};
pub use run::{compare_filters, ospa, run_filter, FilterKind, FilterState, StepComparison, StepResult};
pub use scenario::{generate_scenario, ScanRecord};
pub use verify::{oracle_checks, Check};
