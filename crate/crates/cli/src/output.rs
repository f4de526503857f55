//! CSV and JSON persistence of sweep results.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::sweep::{AggregateRow, ResultRow};

/// Recorded with every results file.
pub const PAIRING: &str = "channel draws depend on (seed, M) only and are shared across regimes, problems, \
eavesdropper outage levels and power budgets";

/// Column names in field order; written as the header of an empty table.
pub trait Columns {
    const COLUMNS: &'static [&'static str];
}

impl Columns for ResultRow {
    const COLUMNS: &'static [&'static str] = &[
        "regime",
        "problem",
        "m",
        "eps_ev",
        "power_mw",
        "seed",
        "unit",
        "objective",
        "sum_secrecy_bps",
        "min_secrecy_bps",
        "transmit_power_mw",
        "iterations",
        "init_iterations",
        "status",
        "mc_eve_outage",
        "mc_eve_std_error",
        "mc_user_outage",
        "mc_user_std_error",
        "mc_pass",
        "wall_time",
    ];
}

impl Columns for AggregateRow {
    const COLUMNS: &'static [&'static str] = &[
        "regime",
        "problem",
        "m",
        "eps_ev",
        "power_mw",
        "unit",
        "runs",
        "used",
        "mean_objective",
        "std_objective",
        "mean_sum_secrecy_bps",
        "mean_transmit_power_mw",
        "mean_iterations",
        "converged",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub config: ExperimentConfig,
    pub pairing: String,
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
}

impl ResultsFile {
    pub fn new(config: ExperimentConfig, rows: Vec<ResultRow>, aggregates: Vec<AggregateRow>) -> Self {
        Self { config, pairing: PAIRING.into(), rows, aggregates }
    }
}

pub fn emit_csv<T: Serialize + Columns>(rows: &[T], path: &Path) -> Result<()> {
    let csv_err = |source| CliError::Csv { path: path.into(), source };
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    w.write_record(T::COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let csv_err = |source| CliError::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
}

pub fn emit_json(results: &ResultsFile, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, results).map_err(|source| CliError::Json { path: path.into(), source })?;
    writeln!(w).and_then(|_| w.flush()).map_err(CliError::io(path))
}

pub fn read_json(path: &Path) -> Result<ResultsFile> {
    let file = File::open(path).map_err(CliError::io(path))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| CliError::Json { path: path.into(), source })
}
