//! Flat `dotted.key = value` experiment configuration.
//!
//! Lists are comma separated. `#` starts a comment. Every key is optional;
//! missing keys take the simulation defaults.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use secbeam_core::algorithms::Problem;
use secbeam_core::model::{default_qos_bps, ANTENNA_CIRCUIT_POWER_MW};
use secbeam_core::{AlgorithmConfig, Regime, Scenario};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Pair counts to sweep.
    pub m: Vec<usize>,
    pub nt: usize,
    pub sigma_u: f64,
    pub sigma_e: f64,
    /// Amplifier drain efficiency; the power scaling is its reciprocal.
    pub efficiency: f64,
    /// Circuit power per transmit antenna (mW).
    pub antenna_power: f64,
    /// QoS threshold in bps/Hz; `None` uses the per-M simulation value.
    pub qos_bps: Option<f64>,
    pub eps_ev: Vec<f64>,
    pub eps_user: f64,
    pub delta: f64,
    pub eve_var: f64,
    /// Per-transmitter power limits to sweep (mW).
    pub powers: Vec<f64>,
    pub regimes: Vec<Regime>,
    pub problems: Vec<Problem>,
    pub n_seeds: usize,
    pub seed0: u64,
    /// Monte-Carlo samples per outage check; 0 disables the checks.
    pub mc_samples: usize,
    pub output_dir: PathBuf,
    pub algorithm: AlgorithmConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: vec![2],
            nt: 4,
            sigma_u: 1.0,
            sigma_e: 1.0,
            efficiency: 0.4,
            antenna_power: ANTENNA_CIRCUIT_POWER_MW,
            qos_bps: None,
            eps_ev: vec![0.1],
            eps_user: 0.1,
            delta: 1e-3,
            eve_var: 1.0,
            powers: vec![10.0, 20.0, 30.0, 40.0, 50.0],
            regimes: vec![Regime::PerfectCsi, Regime::EvOutage, Regime::UserOutage],
            problems: vec![Problem::Maximin, Problem::See],
            n_seeds: 50,
            seed0: 0,
            mc_samples: 0,
            output_dir: PathBuf::from("results"),
            algorithm: AlgorithmConfig::default(),
        }
    }
}

/// Regime spelled as in config files and CSV output.
pub fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::PerfectCsi => "perfect",
        Regime::EvOutage => "ev_outage",
        Regime::UserOutage => "user_outage",
    }
}

pub fn problem_name(p: Problem) -> &'static str {
    match p {
        Problem::Maximin => "maximin",
        Problem::See => "see",
    }
}

pub fn parse_regime(s: &str) -> Option<Regime> {
    match s.trim().to_ascii_lowercase().as_str() {
        "perfect" | "perfect_csi" | "perfectcsi" => Some(Regime::PerfectCsi),
        "ev" | "ev_outage" | "evoutage" => Some(Regime::EvOutage),
        "user" | "user_outage" | "useroutage" => Some(Regime::UserOutage),
        _ => None,
    }
}

pub fn parse_problem(s: &str) -> Option<Problem> {
    match s.trim().to_ascii_lowercase().as_str() {
        "maximin" => Some(Problem::Maximin),
        "see" => Some(Problem::See),
        _ => None,
    }
}

pub fn parse_regimes(s: &str) -> Result<Vec<Regime>> {
    list(s, |v| parse_regime(v).ok_or(()))
        .map_err(|_| CliError::Config(format!("unknown regime in {s:?} (expected perfect, ev_outage, user_outage)")))
}

fn list<T, E>(s: &str, f: impl Fn(&str) -> std::result::Result<T, E>) -> std::result::Result<Vec<T>, ()> {
    s.split(',').map(|v| f(v.trim()).map_err(|_| ())).collect()
}

fn num<T: FromStr>(s: &str) -> std::result::Result<T, ()> {
    s.trim().parse().map_err(|_| ())
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        text.parse()
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let bad = || format!("invalid value {value:?} for {key}");
        match key {
            "scenario.M" => self.m = list(value, num).map_err(|_| bad())?,
            "scenario.Nt" => self.nt = num(value).map_err(|_| bad())?,
            "scenario.sigma_u" => self.sigma_u = num(value).map_err(|_| bad())?,
            "scenario.sigma_e" => self.sigma_e = num(value).map_err(|_| bad())?,
            "scenario.efficiency" => self.efficiency = num(value).map_err(|_| bad())?,
            "scenario.antenna_power" => self.antenna_power = num(value).map_err(|_| bad())?,
            "scenario.qos_bps" => self.qos_bps = Some(num(value).map_err(|_| bad())?),
            "scenario.eps_ev" => self.eps_ev = list(value, num).map_err(|_| bad())?,
            "scenario.eps_user" => self.eps_user = num(value).map_err(|_| bad())?,
            "scenario.delta" => self.delta = num(value).map_err(|_| bad())?,
            "scenario.eve_var" => self.eve_var = num(value).map_err(|_| bad())?,
            "sweep.P" => self.powers = list(value, num).map_err(|_| bad())?,
            "sweep.regimes" => self.regimes = parse_regimes(value).map_err(|e| e.to_string())?,
            "sweep.problems" => self.problems = list(value, |v| parse_problem(v).ok_or(())).map_err(|_| bad())?,
            "run.n_seeds" => self.n_seeds = num(value).map_err(|_| bad())?,
            "run.seed0" => self.seed0 = num(value).map_err(|_| bad())?,
            "run.mc_samples" => self.mc_samples = num(value).map_err(|_| bad())?,
            "run.output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "algorithm.eps_tol" => self.algorithm.eps_tol = num(value).map_err(|_| bad())?,
            "algorithm.max_outer_iter" => self.algorithm.max_outer_iter = num(value).map_err(|_| bad())?,
            "algorithm.eps_b" => self.algorithm.eps_b = num(value).map_err(|_| bad())?,
            "solver.feas_tol" => self.algorithm.solver.feas_tol = num(value).map_err(|_| bad())?,
            "solver.opt_tol" => self.algorithm.solver.opt_tol = num(value).map_err(|_| bad())?,
            "solver.max_iter" => self.algorithm.solver.max_iter = num(value).map_err(|_| bad())?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Checks the sweep and every scenario it will build.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(CliError::Config(msg.into()));
        if self.m.is_empty() || self.powers.is_empty() || self.eps_ev.is_empty() {
            return bad("scenario.M, sweep.P and scenario.eps_ev must be nonempty");
        }
        if self.regimes.is_empty() || self.problems.is_empty() {
            return bad("sweep.regimes and sweep.problems must be nonempty");
        }
        if self.n_seeds == 0 {
            return bad("run.n_seeds must be at least 1");
        }
        if self.mc_samples != 0 && self.mc_samples < 1000 {
            return bad("run.mc_samples must be 0 or at least 1000");
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return bad("scenario.efficiency must lie in (0, 1]");
        }
        let a = &self.algorithm;
        if !(a.eps_tol > 0.0 && a.eps_b > 0.0 && a.max_outer_iter > 0 && a.solver.feas_tol > 0.0 && a.solver.opt_tol > 0.0) {
            return bad("tolerances and iteration caps must be positive");
        }
        for &m in &self.m {
            for &p in &self.powers {
                for &eps_ev in &self.eps_ev {
                    for &r in &self.regimes {
                        self.scenario(m, r, p, eps_ev).validate().map_err(|e| CliError::Config(e.to_string()))?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn scenario(&self, m: usize, regime: Regime, power: f64, eps_ev: f64) -> Scenario {
        let mut sc = Scenario::simulation_defaults(m, regime, power);
        sc.nt = self.nt;
        sc.sigma_u = vec![self.sigma_u; m];
        sc.sigma_e = self.sigma_e;
        sc.zeta = 1.0 / self.efficiency;
        sc.pc = (m * self.nt) as f64 * self.antenna_power;
        sc.qos = vec![self.qos_bps.unwrap_or(default_qos_bps(m)) * std::f64::consts::LN_2; m];
        sc.eps_ev = eps_ev;
        sc.eps_user = self.eps_user;
        sc.delta = self.delta;
        sc.eve_var = self.eve_var;
        sc
    }
}

impl FromStr for ExperimentConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(CliError::ConfigLine { line, msg: format!("expected key = value, got {content:?}") });
            };
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(CliError::ConfigLine { line, msg: format!("duplicate key {key:?}") });
            }
            cfg.set(key, value).map_err(|msg| CliError::ConfigLine { line, msg })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for ExperimentConfig {
    /// Writes the config back in the file format; parsing the output yields `self`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T: fmt::Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        writeln!(f, "scenario.M = {}", join(&self.m))?;
        writeln!(f, "scenario.Nt = {}", self.nt)?;
        writeln!(f, "scenario.sigma_u = {}", self.sigma_u)?;
        writeln!(f, "scenario.sigma_e = {}", self.sigma_e)?;
        writeln!(f, "scenario.efficiency = {}", self.efficiency)?;
        writeln!(f, "scenario.antenna_power = {}", self.antenna_power)?;
        if let Some(q) = self.qos_bps {
            writeln!(f, "scenario.qos_bps = {q}")?;
        }
        writeln!(f, "scenario.eps_ev = {}", join(&self.eps_ev))?;
        writeln!(f, "scenario.eps_user = {}", self.eps_user)?;
        writeln!(f, "scenario.delta = {}", self.delta)?;
        writeln!(f, "scenario.eve_var = {}", self.eve_var)?;
        writeln!(f, "sweep.P = {}", join(&self.powers))?;
        let regimes: Vec<_> = self.regimes.iter().map(|&r| regime_name(r)).collect();
        writeln!(f, "sweep.regimes = {}", regimes.join(","))?;
        let problems: Vec<_> = self.problems.iter().map(|&p| problem_name(p)).collect();
        writeln!(f, "sweep.problems = {}", problems.join(","))?;
        writeln!(f, "run.n_seeds = {}", self.n_seeds)?;
        writeln!(f, "run.seed0 = {}", self.seed0)?;
        writeln!(f, "run.mc_samples = {}", self.mc_samples)?;
        writeln!(f, "run.output_dir = {}", self.output_dir.display())?;
        writeln!(f, "algorithm.eps_tol = {}", self.algorithm.eps_tol)?;
        writeln!(f, "algorithm.max_outer_iter = {}", self.algorithm.max_outer_iter)?;
        writeln!(f, "algorithm.eps_b = {}", self.algorithm.eps_b)?;
        writeln!(f, "solver.feas_tol = {}", self.algorithm.solver.feas_tol)?;
        writeln!(f, "solver.opt_tol = {}", self.algorithm.solver.opt_tol)?;
        writeln!(f, "solver.max_iter = {}", self.algorithm.solver.max_iter)
    }
}
