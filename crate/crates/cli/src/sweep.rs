//! Seeded sweeps over pair counts, power budgets, regimes and problems.

use rayon::prelude::*;
use secbeam_core::algorithms::{run, ConvergenceReport, Problem};
use secbeam_core::model::sample_channels;
use secbeam_core::{nats_to_bits, see_to_bits_per_joule, ChannelSet, Regime, RunSeed, RunStatus, Scenario};
use serde::{Deserialize, Serialize};

use crate::config::{parse_problem, parse_regime, problem_name, regime_name, ExperimentConfig};
use crate::validate::{validate_solution, Validation};

/// One point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub m: usize,
    pub regime: Regime,
    pub problem: Problem,
    pub eps_ev: f64,
    pub power: f64,
    pub seed: u64,
}

impl Cell {
    pub fn scenario(&self, cfg: &ExperimentConfig) -> Scenario {
        cfg.scenario(self.m, self.regime, self.power, self.eps_ev)
    }

    /// Channels depend on the seed and dimensions only, so every regime and
    /// power budget of one seed sees the same draw.
    pub fn channels(&self, sc: &Scenario) -> ChannelSet {
        sample_channels(sc, RunSeed(self.seed))
    }

    pub fn run(&self, cfg: &ExperimentConfig) -> (Scenario, ChannelSet, secbeam_core::Result<ConvergenceReport>) {
        let sc = self.scenario(cfg);
        let ch = self.channels(&sc);
        let rep = run(self.problem, &sc, &ch, &cfg.algorithm);
        (sc, ch, rep)
    }
}

/// Per-run record. Rates are in bps/Hz, energy efficiency in bits/J/Hz and
/// powers in mW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub regime: String,
    pub problem: String,
    pub m: usize,
    /// Absent for perfect channel knowledge.
    pub eps_ev: Option<f64>,
    pub power_mw: f64,
    pub seed: u64,
    /// `bps/Hz` (maximin) or `bits/J/Hz` (SEE).
    pub unit: String,
    /// Result fields are absent when the run reported an error.
    pub objective: Option<f64>,
    pub sum_secrecy_bps: Option<f64>,
    pub min_secrecy_bps: Option<f64>,
    pub transmit_power_mw: Option<f64>,
    pub iterations: usize,
    pub init_iterations: usize,
    pub status: String,
    /// Per-user Monte-Carlo eavesdropper outage at the solution, `;`-separated.
    pub mc_eve_outage: String,
    pub mc_eve_std_error: String,
    /// Per-user Monte-Carlo user outage at the solution, `;`-separated.
    pub mc_user_outage: String,
    pub mc_user_std_error: String,
    pub mc_pass: Option<bool>,
    pub wall_time: f64,
}

/// Mean and standard deviation over the usable rows of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub regime: String,
    pub problem: String,
    pub m: usize,
    pub eps_ev: Option<f64>,
    pub power_mw: f64,
    pub unit: String,
    pub runs: usize,
    /// Rows with a final iterate of the requested problem; the means are
    /// absent when there are none.
    pub used: usize,
    pub mean_objective: Option<f64>,
    pub std_objective: Option<f64>,
    pub mean_sum_secrecy_bps: Option<f64>,
    pub mean_transmit_power_mw: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub converged: usize,
}

pub fn unit(problem: Problem) -> &'static str {
    match problem {
        Problem::Maximin => "bps/Hz",
        Problem::See => "bits/J/Hz",
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Converged => "converged",
        RunStatus::MaxIter => "max_iter",
        RunStatus::SolverFallback => "solver_fallback",
        RunStatus::Infeasible => "infeasible",
    }
}

/// Statuses whose final iterate belongs to the requested problem.
pub fn usable(status: &str) -> bool {
    matches!(status, "converged" | "max_iter" | "solver_fallback")
}

pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &m in &cfg.m {
        for &regime in &cfg.regimes {
            // The eavesdropper outage level only matters when the eavesdropper
            // channel is statistical.
            let levels: &[f64] = if regime == Regime::PerfectCsi { &cfg.eps_ev[..1] } else { &cfg.eps_ev };
            for &eps_ev in levels {
                for &problem in &cfg.problems {
                    for &power in &cfg.powers {
                        for k in 0..cfg.n_seeds as u64 {
                            out.push(Cell { m, regime, problem, eps_ev, power, seed: cfg.seed0 + k });
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn run_cell(cell: &Cell, cfg: &ExperimentConfig) -> ResultRow {
    let (sc, ch, rep) = cell.run(cfg);
    let mut row = ResultRow {
        regime: regime_name(cell.regime).into(),
        problem: problem_name(cell.problem).into(),
        m: cell.m,
        eps_ev: (cell.regime != Regime::PerfectCsi).then_some(cell.eps_ev),
        power_mw: cell.power,
        seed: cell.seed,
        unit: unit(cell.problem).into(),
        objective: None,
        sum_secrecy_bps: None,
        min_secrecy_bps: None,
        transmit_power_mw: None,
        iterations: 0,
        init_iterations: 0,
        status: "error".into(),
        mc_eve_outage: String::new(),
        mc_eve_std_error: String::new(),
        mc_user_outage: String::new(),
        mc_user_std_error: String::new(),
        mc_pass: None,
        wall_time: 0.0,
    };
    let rep = match rep {
        Ok(r) => r,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    let st = rep.final_state();
    row.objective = Some(match cell.problem {
        Problem::Maximin => nats_to_bits(rep.objective()),
        Problem::See => see_to_bits_per_joule(rep.objective()),
    });
    row.sum_secrecy_bps = Some(nats_to_bits(st.secrecy.iter().sum()));
    row.min_secrecy_bps = Some(nats_to_bits(st.secrecy.iter().copied().fold(f64::INFINITY, f64::min)));
    row.transmit_power_mw = Some(st.w.norms_sq().iter().sum());
    row.iterations = rep.iterations;
    row.init_iterations = rep.init_iterations;
    row.status = status_name(rep.status).into();
    row.wall_time = rep.wall_time;
    if cfg.mc_samples > 0 && usable(&row.status) {
        if let Some(v) = validate_solution(&sc, &ch, st, cfg.mc_samples, cell.seed) {
            attach(&mut row, &v);
        }
    }
    row
}

/// The cell that produced `row`, or `None` if the row does not belong to `cfg`.
pub fn cell_of(row: &ResultRow, cfg: &ExperimentConfig) -> Option<Cell> {
    let regime = parse_regime(&row.regime)?;
    let eps_ev = match row.eps_ev {
        Some(e) => e,
        None if regime == Regime::PerfectCsi => *cfg.eps_ev.first()?,
        None => return None,
    };
    Some(Cell { m: row.m, regime, problem: parse_problem(&row.problem)?, eps_ev, power: row.power_mw, seed: row.seed })
}

pub fn attach(row: &mut ResultRow, v: &Validation) {
    row.mc_eve_outage = join(&v.eve.iter().map(|e| e.estimate).collect::<Vec<_>>());
    row.mc_eve_std_error = join(&v.eve.iter().map(|e| e.std_error).collect::<Vec<_>>());
    row.mc_user_outage = join(&v.user.iter().map(|e| e.estimate).collect::<Vec<_>>());
    row.mc_user_std_error = join(&v.user.iter().map(|e| e.std_error).collect::<Vec<_>>());
    row.mc_pass = Some(v.passed);
}

/// Runs every cell of the sweep. Rows come back sorted by cell order, so the
/// output does not depend on scheduling.
pub fn run_sweep(cfg: &ExperimentConfig) -> Vec<ResultRow> {
    cells(cfg).par_iter().map(|c| run_cell(c, cfg)).collect()
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Sample standard deviation; zero for a single value.
fn std_dev(v: &[f64]) -> Option<f64> {
    let mu = mean(v)?;
    if v.len() < 2 {
        return Some(0.0);
    }
    Some((v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

/// One aggregate per sweep point, in first-appearance order of `rows`.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let key = |r: &ResultRow| (r.regime.clone(), r.problem.clone(), r.m, r.eps_ev.map(f64::to_bits), r.power_mw.to_bits());
    let mut keys = Vec::new();
    for r in rows {
        if !keys.contains(&key(r)) {
            keys.push(key(r));
        }
    }
    keys.into_iter()
        .map(|k| {
            let group: Vec<&ResultRow> = rows.iter().filter(|r| key(r) == k).collect();
            let used: Vec<&&ResultRow> = group.iter().filter(|r| usable(&r.status)).collect();
            let col = |f: fn(&ResultRow) -> Option<f64>| used.iter().filter_map(|r| f(r)).collect::<Vec<_>>();
            let objective = col(|r| r.objective);
            let first = group[0];
            AggregateRow {
                regime: first.regime.clone(),
                problem: first.problem.clone(),
                m: first.m,
                eps_ev: first.eps_ev,
                power_mw: first.power_mw,
                unit: first.unit.clone(),
                runs: group.len(),
                used: used.len(),
                mean_objective: mean(&objective),
                std_objective: std_dev(&objective),
                mean_sum_secrecy_bps: mean(&col(|r| r.sum_secrecy_bps)),
                mean_transmit_power_mw: mean(&col(|r| r.transmit_power_mw)),
                mean_iterations: mean(&col(|r| Some(r.iterations as f64))),
                converged: group.iter().filter(|r| r.status == "converged").count(),
            }
        })
        .collect()
}
