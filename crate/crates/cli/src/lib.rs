//! Experiment driver: seeded sweeps, Monte-Carlo validation of outage
//! constraints and CSV/JSON result tables.

pub mod config;
pub mod error;
pub mod output;
pub mod sweep;
pub mod table;
pub mod validate;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use output::{emit_csv, emit_json, read_csv, read_json, ResultsFile};
pub use sweep::{aggregate, run_sweep, AggregateRow, Cell, ResultRow};
pub use table::iteration_tables;
pub use validate::{validate_solution, Validation};
