use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use secbeam_cli::config::parse_regimes;
use secbeam_cli::sweep::{attach, cell_of, usable};
use secbeam_cli::{
    aggregate, emit_csv, emit_json, iteration_tables, read_csv, read_json, run_sweep, validate_solution, CliError,
    ExperimentConfig, ResultRow, ResultsFile,
};

/// Monte-Carlo samples per check when neither the flag nor the results file sets them.
const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Parser)]
#[command(name = "secbeam", version, about = "Secure beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file.
    Run {
        config: PathBuf,
        /// First channel seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated regimes (perfect, ev_outage, user_outage).
        #[arg(long)]
        regimes: Option<String>,
    },
    /// Rerun the Monte-Carlo outage checks for every row of a results file.
    Validate {
        results: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        /// Offset added to each row's seed for the Monte-Carlo draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only rows of these regimes.
        #[arg(long)]
        regimes: Option<String>,
        /// Write the results file with the checks attached.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the average iteration tables of a results CSV.
    Table { results: PathBuf },
}

fn run(config: &Path, seed: Option<u64>, out: Option<PathBuf>, regimes: Option<String>) -> secbeam_cli::Result<()> {
    let mut cfg = ExperimentConfig::from_path(config)?;
    if let Some(s) = seed {
        cfg.seed0 = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    if let Some(r) = regimes {
        cfg.regimes = parse_regimes(&r)?;
    }
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let rows = run_sweep(&cfg);
    let agg = aggregate(&rows);
    emit_csv(&rows, &dir.join("results.csv"))?;
    emit_csv(&agg, &dir.join("aggregates.csv"))?;
    let failed = rows.iter().filter(|r| !usable(&r.status)).count();
    print!("{}", iteration_tables(&rows));
    println!("\n{} runs, {} without a usable solution; results in {}", rows.len(), failed, dir.display());
    emit_json(&ResultsFile::new(cfg, rows, agg), &dir.join("results.json"))
}

/// Returns whether every checked row passed.
fn validate(
    path: &Path,
    samples: Option<usize>,
    seed: u64,
    regimes: Option<String>,
    out: Option<PathBuf>,
) -> secbeam_cli::Result<bool> {
    let mut file = read_json(path)?;
    let cfg = file.config.clone();
    let n = samples.or((cfg.mc_samples > 0).then_some(cfg.mc_samples)).unwrap_or(DEFAULT_SAMPLES);
    let keep = regimes.as_deref().map(parse_regimes).transpose()?;
    let mut cells = Vec::new();
    for (k, row) in file.rows.iter().enumerate() {
        let cell = cell_of(row, &cfg).ok_or_else(|| CliError::Config(format!("row {k} does not match the config")))?;
        if usable(&row.status) && keep.as_ref().is_none_or(|r| r.contains(&cell.regime)) {
            cells.push((k, cell));
        }
    }
    let checks: Vec<_> = cells
        .par_iter()
        .map(|(k, cell)| {
            let (sc, ch, rep) = cell.run(&cfg);
            let v = rep.ok().and_then(|r| validate_solution(&sc, &ch, r.final_state(), n, cell.seed.wrapping_add(seed)));
            (*k, v)
        })
        .collect();
    let (mut checked, mut failed) = (0, 0);
    for (k, v) in checks {
        let Some(v) = v else { continue };
        checked += 1;
        let row: &mut ResultRow = &mut file.rows[k];
        attach(row, &v);
        if !v.passed {
            failed += 1;
            println!(
                "FAIL {} {} M={} P={} seed={}: eve [{}] user [{}]",
                row.regime, row.problem, row.m, row.power_mw, row.seed, row.mc_eve_outage, row.mc_user_outage
            );
        }
    }
    println!("{checked} solutions checked with {n} samples, {failed} failed");
    if let Some(o) = out {
        emit_json(&file, &o)?;
    }
    Ok(failed == 0)
}

fn table(path: &Path) -> secbeam_cli::Result<()> {
    let rows: Vec<ResultRow> = read_csv(path)?;
    print!("{}", iteration_tables(&rows));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors count as configuration errors
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let res = match cli.command {
        Command::Run { config, seed, out, regimes } => run(&config, seed, out, regimes).map(|_| true),
        Command::Validate { results, samples, seed, regimes, out } => validate(&results, samples, seed, regimes, out),
        Command::Table { results } => table(&results).map(|_| true),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
