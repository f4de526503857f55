//! Path-following outer loops for the maximin and energy-efficiency problems
//! in each channel-knowledge regime.
//!
//! Every loop alternates between building the convex subproblem around the
//! current iterate, solving it, and tightening the auxiliary rate variables
//! by root finding. A candidate is accepted only if its exact objective does
//! not decrease.

mod regimes;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use regimes::{EvOps, PerfectOps, RegimeOps, UserOps};

use crate::error::{Error, Result};
use crate::model::{total_power, BeamformerSet, CVector, ChannelSet, Regime, Scenario};
use crate::rates::{objective_maximin, objective_see};
use crate::solver::{solve, PowerBlock, SolveStatus, SolverConfig, SubproblemModel};
use crate::surrogates::{total_power_expr, Expr};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    /// Relative-increment stopping tolerance.
    pub eps_tol: f64,
    pub max_outer_iter: usize,
    pub solver: SolverConfig,
    /// Bisection tolerance for the rate roots.
    pub eps_b: f64,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self { eps_tol: 1e-4, max_outer_iter: 200, solver: SolverConfig::default(), eps_b: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RunStatus {
    Converged,
    MaxIter,
    SolverFallback,
    Infeasible,
}

/// Which of the two design problems to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Problem {
    Maximin,
    See,
}

/// One accepted iterate with its exact per-user secrecy rates (nats).
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub w: BeamformerSet,
    /// Eavesdropper outage SINRs.
    pub r: Option<Vec<f64>>,
    /// Guaranteed user SINRs under channel errors.
    pub big_r: Option<Vec<f64>>,
    pub secrecy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub iterates: Vec<IterateState>,
    /// Objective after each accepted iterate, starting with the initial point.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Outer iterations spent finding the starting point.
    pub init_iterations: usize,
    pub status: RunStatus,
    pub wall_time: f64,
    pub diagnostic: Option<String>,
}

impl ConvergenceReport {
    pub fn final_state(&self) -> &IterateState {
        self.iterates.last().expect("report holds the initial point")
    }

    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("report holds the initial point")
    }
}

/// Objective of one outer loop.
#[derive(Debug, Clone, PartialEq)]
pub enum Goal {
    /// `min_i (weights_i secrecy_i + offsets_i)`.
    Maximin { weights: Vec<f64>, offsets: Vec<f64> },
    /// `sum_i secrecy_i / pi(w)` subject to `secrecy_i >= qos_i`.
    See { qos: Vec<f64> },
}

impl Goal {
    pub fn maximin(m: usize) -> Self {
        Goal::Maximin { weights: vec![1.0; m], offsets: vec![0.0; m] }
    }

    /// Feasibility phase for QoS thresholds: the objective reaches 1 exactly
    /// when every `secrecy_i >= qos_i`.
    pub fn qos_ratio(qos: &[f64]) -> Self {
        let (weights, offsets) = qos.iter().map(|&c| if c > 0.0 { (1.0 / c, 0.0) } else { (1.0, 1.0) }).unzip();
        Goal::Maximin { weights, offsets }
    }

    pub fn value(&self, st: &IterateState, scenario: &Scenario) -> f64 {
        match self {
            Goal::Maximin { weights, offsets } => {
                let v: Vec<f64> = st.secrecy.iter().zip(weights).zip(offsets).map(|((s, w), o)| w * s + o).collect();
                objective_maximin(&v)
            }
            Goal::See { .. } => objective_see(&st.secrecy, total_power(&st.w, scenario)),
        }
    }
}

/// Maximum-ratio transmission at full power: `w_i = sqrt(P_i) h_ii / ||h_ii||`.
pub fn init_mrt(scenario: &Scenario, h: &[Vec<CVector>]) -> BeamformerSet {
    let w = (0..scenario.m)
        .map(|i| {
            let hi = &h[i][i];
            let norm = hi.norm();
            if norm > 0.0 {
                hi * num_complex::Complex64::from(scenario.power[i].sqrt() / norm)
            } else {
                let mut v = CVector::zeros(scenario.nt);
                v[0] = num_complex::Complex64::from(scenario.power[i].sqrt());
                v
            }
        })
        .collect();
    BeamformerSet { w }
}

fn build_model<O: RegimeOps>(ops: &O, goal: &Goal, st: &IterateState, theta: f64) -> Result<SubproblemModel> {
    let scenario = ops.scenario();
    let with_t = matches!(goal, Goal::Maximin { .. });
    let layout = ops.layout(with_t);
    let (terms, mut constraints) = ops.subproblem(st, &layout)?;
    let start = layout.pack(&st.w, st.r.as_deref(), st.big_r.as_deref(), Some(0.0));
    let power = (0..scenario.m)
        .map(|i| PowerBlock { range: layout.w_block(i), limit: scenario.power[i] })
        .collect();
    match goal {
        Goal::Maximin { weights, offsets } => {
            let scaled = terms
                .iter()
                .zip(weights.iter().zip(offsets))
                .map(|(t, (&w, &o))| Expr::constant(o).add_scaled(w, t))
                .collect();
            SubproblemModel::epigraph(scaled, constraints, start, power)
        }
        Goal::See { qos } => {
            let mut objective = Expr::constant(0.0);
            for (t, &c) in terms.iter().zip(qos) {
                objective = objective.add_scaled(1.0, t);
                constraints.push(t.clone().add_const(-c));
            }
            objective = objective.add_scaled(-theta, &total_power_expr(scenario, &layout));
            Ok(SubproblemModel { n: layout.n(), objective, constraints, start, power })
        }
    }
}

/// Generic outer loop. With `target`, stops as soon as the objective reaches
/// it and reports `Infeasible` if it never does.
pub fn path_follow<O: RegimeOps>(
    ops: &O,
    goal: &Goal,
    init: IterateState,
    cfg: &AlgorithmConfig,
    target: Option<f64>,
) -> ConvergenceReport {
    let clock = Instant::now();
    let scenario = ops.scenario();
    let mut obj = goal.value(&init, scenario);
    let mut report = ConvergenceReport {
        iterates: vec![init],
        objective_trace: vec![obj],
        iterations: 0,
        init_iterations: 0,
        status: RunStatus::MaxIter,
        wall_time: 0.0,
        diagnostic: None,
    };
    let finish = |mut r: ConvergenceReport, status, diag: Option<String>| {
        r.status = status;
        r.diagnostic = diag;
        r.wall_time = clock.elapsed().as_secs_f64();
        r
    };
    if target.is_some_and(|t| obj >= t) {
        return finish(report, RunStatus::Converged, None);
    }
    for _ in 0..cfg.max_outer_iter {
        let st = report.iterates.last().expect("nonempty");
        let step = (|| -> Result<(IterateState, SolveStatus)> {
            let model = build_model(ops, goal, st, obj)?;
            let out = solve(&model, &cfg.solver)?;
            if out.status == SolveStatus::NumericalFailure {
                return Ok((st.clone(), out.status));
            }
            let layout = ops.layout(matches!(goal, Goal::Maximin { .. }));
            Ok((ops.refine(&out.x, &layout, st)?, out.status))
        })();
        let (candidate, status) = match step {
            Ok(v) => v,
            Err(e) => {
                let fallback = if target.is_some() { RunStatus::Infeasible } else { RunStatus::SolverFallback };
                return finish(report, fallback, Some(e.to_string()));
            }
        };
        if status == SolveStatus::NumericalFailure {
            let fallback = if target.is_some() { RunStatus::Infeasible } else { RunStatus::SolverFallback };
            return finish(report, fallback, Some("subproblem solver failed".into()));
        }
        let new_obj = goal.value(&candidate, scenario);
        if !(new_obj >= obj) {
            // No exact improvement left: the previous iterate is final.
            let status = if target.is_some() { RunStatus::Infeasible } else { RunStatus::Converged };
            return finish(report, status, None);
        }
        report.iterations += 1;
        report.iterates.push(candidate);
        report.objective_trace.push(new_obj);
        let old = obj;
        obj = new_obj;
        if let Some(t) = target {
            if obj >= t {
                return finish(report, RunStatus::Converged, None);
            }
            continue;
        }
        if (new_obj - old) / old.abs().max(1e-10) <= cfg.eps_tol {
            return finish(report, RunStatus::Converged, None);
        }
    }
    let status = if target.is_some() { RunStatus::Infeasible } else { RunStatus::MaxIter };
    finish(report, status, None)
}

fn feasible_start<O: RegimeOps>(ops: &O, init: IterateState, cfg: &AlgorithmConfig) -> (ConvergenceReport, bool) {
    let goal = Goal::qos_ratio(&ops.scenario().qos);
    let rep = path_follow(ops, &goal, init, cfg, Some(1.0));
    let ok = rep.status == RunStatus::Converged;
    (rep, ok)
}

fn see_from<O: RegimeOps>(ops: &O, init: IterateState, cfg: &AlgorithmConfig, prior_iterations: usize) -> ConvergenceReport {
    let (phase, ok) = feasible_start(ops, init, cfg);
    let init_iterations = prior_iterations + phase.iterations;
    if !ok {
        let mut phase = phase;
        phase.init_iterations = init_iterations;
        phase.iterations = 0;
        phase.status = RunStatus::Infeasible;
        return phase;
    }
    let goal = Goal::See { qos: ops.scenario().qos.clone() };
    let mut rep = path_follow(ops, &goal, phase.final_state().clone(), cfg, None);
    rep.init_iterations = init_iterations;
    rep.wall_time += phase.wall_time;
    rep
}

fn check(scenario: &Scenario, ch: &ChannelSet, regime: Regime) -> Result<()> {
    scenario.validate()?;
    ch.check(regime)?;
    if ch.m() != scenario.m || ch.direct.iter().any(|row| row.len() != scenario.m || row.iter().any(|h| h.len() != scenario.nt)) {
        return Err(Error::InvalidScenario("channel dimensions do not match the scenario".into()));
    }
    Ok(())
}

/// Maximin secrecy throughput with perfect channel knowledge.
pub fn alg1_maximin_instant(scenario: &Scenario, ch: &ChannelSet, cfg: &AlgorithmConfig) -> Result<ConvergenceReport> {
    check(scenario, ch, Regime::PerfectCsi)?;
    let ops = PerfectOps::new(scenario, ch);
    let init = ops.initial_state(init_mrt(scenario, &ch.direct))?;
    Ok(path_follow(&ops, &Goal::maximin(scenario.m), init, cfg, None))
}

/// Secure energy efficiency with perfect channel knowledge.
pub fn alg2_see_instant(scenario: &Scenario, ch: &ChannelSet, cfg: &AlgorithmConfig) -> Result<ConvergenceReport> {
    check(scenario, ch, Regime::PerfectCsi)?;
    let ops = PerfectOps::new(scenario, ch);
    let init = ops.initial_state(init_mrt(scenario, &ch.direct))?;
    Ok(see_from(&ops, init, cfg, 0))
}

/// Maximin secrecy throughput when only eavesdropper channel statistics are known.
pub fn alg3_maximin_ev_outage(scenario: &Scenario, ch: &ChannelSet, cfg: &AlgorithmConfig) -> Result<ConvergenceReport> {
    check(scenario, ch, Regime::EvOutage)?;
    let ops = EvOps::new(scenario, ch, cfg.eps_b);
    let init = ops.initial_state(init_mrt(scenario, &ch.direct))?;
    Ok(path_follow(&ops, &Goal::maximin(scenario.m), init, cfg, None))
}

/// Secure energy efficiency when only eavesdropper channel statistics are known.
pub fn see_ev_outage(scenario: &Scenario, ch: &ChannelSet, cfg: &AlgorithmConfig) -> Result<ConvergenceReport> {
    check(scenario, ch, Regime::EvOutage)?;
    let ops = EvOps::new(scenario, ch, cfg.eps_b);
    let init = ops.initial_state(init_mrt(scenario, &ch.direct))?;
    Ok(see_from(&ops, init, cfg, 0))
}

/// Converged eavesdropper-outage design over the nominal user channels,
/// lifted to a user-outage iterate.
fn user_initial_state(ops: &UserOps, scenario: &Scenario, ch: &ChannelSet, cfg: &AlgorithmConfig) -> Result<(IterateState, ConvergenceReport)> {
    let nominal_ch = ChannelSet { direct: ch.nominal()?.to_vec(), ..ch.clone() };
    let ev = EvOps::new(scenario, &nominal_ch, cfg.eps_b);
    let ev_init = ev.initial_state(init_mrt(scenario, &nominal_ch.direct))?;
    let rep = path_follow(&ev, &Goal::maximin(scenario.m), ev_init, cfg, None);
    let st = rep.final_state();
    let init = ops.initial_state(st.w.clone(), st.r.clone().expect("eavesdropper rates"))?;
    Ok((init, rep))
}

/// Maximin secrecy throughput with uncertain user channels.
pub fn alg4_maximin_user_outage(scenario: &Scenario, ch: &ChannelSet, cfg: &AlgorithmConfig) -> Result<ConvergenceReport> {
    check(scenario, ch, Regime::UserOutage)?;
    let ops = UserOps::new(scenario, ch, cfg.eps_b);
    let (init, pre) = user_initial_state(&ops, scenario, ch, cfg)?;
    let mut rep = path_follow(&ops, &Goal::maximin(scenario.m), init, cfg, None);
    rep.init_iterations = pre.iterations;
    Ok(rep)
}

/// Secure energy efficiency with uncertain user channels.
pub fn see_user_outage(scenario: &Scenario, ch: &ChannelSet, cfg: &AlgorithmConfig) -> Result<ConvergenceReport> {
    check(scenario, ch, Regime::UserOutage)?;
    let ops = UserOps::new(scenario, ch, cfg.eps_b);
    let (init, pre) = user_initial_state(&ops, scenario, ch, cfg)?;
    Ok(see_from(&ops, init, cfg, pre.iterations))
}

/// Dispatches to the loop for `problem` in the scenario's regime.
pub fn run(problem: Problem, scenario: &Scenario, ch: &ChannelSet, cfg: &AlgorithmConfig) -> Result<ConvergenceReport> {
    match (scenario.regime, problem) {
        (Regime::PerfectCsi, Problem::Maximin) => alg1_maximin_instant(scenario, ch, cfg),
        (Regime::PerfectCsi, Problem::See) => alg2_see_instant(scenario, ch, cfg),
        (Regime::EvOutage, Problem::Maximin) => alg3_maximin_ev_outage(scenario, ch, cfg),
        (Regime::EvOutage, Problem::See) => see_ev_outage(scenario, ch, cfg),
        (Regime::UserOutage, Problem::Maximin) => alg4_maximin_user_outage(scenario, ch, cfg),
        (Regime::UserOutage, Problem::See) => see_user_outage(scenario, ch, cfg),
    }
}
