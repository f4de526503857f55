//! Log-barrier Newton method for the convex subproblems.
//!
//! Problems have the form `maximize f0(x) s.t. c_k(x) >= 0` with `f0` and
//! every `c_k` concave [`Expr`]s. A start on the boundary of the feasible
//! set is first pushed into the interior by a short phase-one solve.

use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surrogates::{Affine, Atom, Expr};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Allowed constraint violation relative to the constraint's magnitude.
    pub feas_tol: f64,
    /// Target duality-gap bound `m / tau`.
    pub opt_tol: f64,
    /// Cap on the total number of Newton steps.
    pub max_iter: usize,
    /// Barrier parameter growth factor.
    pub mu: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { feas_tol: 1e-8, opt_tol: 1e-6, max_iter: 400, mu: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Largest relative constraint violation at `x`.
    pub residual: f64,
    /// Duality-gap bound at the last completed centering.
    pub optimality: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// Coordinates of one transmitter's beamformer and its power limit.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerBlock {
    pub range: Range<usize>,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemModel {
    pub n: usize,
    pub objective: Expr,
    pub constraints: Vec<Expr>,
    pub start: Vec<f64>,
    pub power: Vec<PowerBlock>,
}

impl SubproblemModel {
    /// Epigraph form of `maximize min_i terms_i`: the last coordinate is the
    /// slack `t`, initialised just below the smallest term at `start`.
    pub fn epigraph(terms: Vec<Expr>, mut constraints: Vec<Expr>, mut start: Vec<f64>, power: Vec<PowerBlock>) -> Result<Self> {
        let n = start.len();
        let t = n - 1;
        let mut t0 = f64::INFINITY;
        for term in &terms {
            let v = term.value(&start).ok_or_else(|| Error::Domain("epigraph term undefined at start".into()))?;
            t0 = t0.min(v);
        }
        start[t] = t0 - 1e-3 * (1.0 + t0.abs());
        for term in terms {
            constraints.push(term.with(-1.0, Atom::Affine(Affine::var(t))));
        }
        Ok(Self { n, objective: Expr::constant(0.0).with(1.0, Atom::Affine(Affine::var(t))), constraints, start, power })
    }
}

struct PathResult {
    x: Vec<f64>,
    gap: f64,
    iterations: usize,
    status: SolveStatus,
}

/// Follows the central path of `tau f0 + sum ln c_k` from a strictly
/// feasible `x`. `stop` is checked after every Newton step.
fn central_path(
    objective: &Expr,
    constraints: &[Expr],
    mut x: Vec<f64>,
    tau0: f64,
    cfg: &SolverConfig,
    stop: &dyn Fn(&[f64]) -> bool,
) -> PathResult {
    let n = x.len();
    let m = constraints.len().max(1) as f64;
    let mut tau = tau0;
    let mut iterations = 0;
    let barrier = |x: &[f64], tau: f64| -> Option<f64> {
        let mut v = tau * objective.value(x)?;
        for c in constraints {
            let ck = c.value(x)?;
            if !(ck > 0.0) {
                return None;
            }
            v += ck.ln();
        }
        Some(v)
    };
    loop {
        // centering
        let mut centered = false;
        for _ in 0..100 {
            let mut g = vec![0.0; n];
            let mut h = DMatrix::zeros(n, n);
            objective.add_grad(&x, tau, &mut g);
            objective.add_hess(&x, tau, &mut h);
            for c in constraints {
                let ck = c.value(&x).unwrap_or(f64::NAN);
                let gk = c.grad(&x);
                for (gi, v) in g.iter_mut().zip(&gk) {
                    *gi += v / ck;
                }
                c.add_hess(&x, 1.0 / ck, &mut h);
                let gk = DVector::from_vec(gk);
                h.ger(-1.0 / (ck * ck), &gk, &gk, 1.0);
            }
            let Some(d) = newton_direction(h, &g) else {
                return PathResult { x, gap: m / tau, iterations, status: SolveStatus::NumericalFailure };
            };
            let lambda_sq: f64 = g.iter().zip(d.iter()).map(|(a, b)| a * b).sum();
            if !lambda_sq.is_finite() {
                return PathResult { x, gap: m / tau, iterations, status: SolveStatus::NumericalFailure };
            }
            if lambda_sq < 1e-10 {
                centered = true;
                break;
            }
            let phi0 = barrier(&x, tau).unwrap_or(f64::NEG_INFINITY);
            let slack = 1e-13 * (1.0 + phi0.abs());
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-14 {
                let xn: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + alpha * b).collect();
                if let Some(phi) = barrier(&xn, tau) {
                    if phi >= phi0 + 0.25 * alpha * lambda_sq - slack {
                        // A damped step accepted only through the round-off
                        // slack makes no progress.
                        moved = phi > phi0 || alpha == 1.0;
                        if moved {
                            x = xn;
                        }
                        break;
                    }
                }
                alpha *= 0.5;
            }
            iterations += 1;
            if stop(&x) {
                return PathResult { x, gap: m / tau, iterations, status: SolveStatus::Optimal };
            }
            if !moved {
                // No representable improvement: as central as floating point allows.
                centered = lambda_sq < 1e-4 * (1.0 + phi0.abs()).sqrt();
                break;
            }
            if iterations >= cfg.max_iter {
                return PathResult { x, gap: f64::INFINITY, iterations, status: SolveStatus::MaxIterations };
            }
        }
        if !centered {
            return PathResult { x, gap: f64::INFINITY, iterations, status: SolveStatus::NumericalFailure };
        }
        if m / tau < cfg.opt_tol {
            return PathResult { x, gap: m / tau, iterations, status: SolveStatus::Optimal };
        }
        tau *= cfg.mu;
    }
}

/// Solves `(-H) d = g` for the ascent direction, adding a ridge if `-H` is
/// not numerically positive definite.
fn newton_direction(h: DMatrix<f64>, g: &[f64]) -> Option<DVector<f64>> {
    let n = g.len();
    let neg = -h;
    let rhs = DVector::from_column_slice(g);
    let diag_max = (0..n).map(|k| neg[(k, k)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..20 {
        let mut a = neg.clone();
        for k in 0..n {
            a[(k, k)] += ridge;
        }
        if let Some(ch) = Cholesky::new(a) {
            let d = ch.solve(&rhs);
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        ridge = if ridge == 0.0 { 1e-14 * diag_max } else { ridge * 100.0 };
    }
    None
}

fn project_power(x: &mut [f64], power: &[PowerBlock]) {
    for b in power {
        let sq: f64 = x[b.range.clone()].iter().map(|v| v * v).sum();
        if sq > b.limit {
            let s = (b.limit / sq).sqrt();
            for v in &mut x[b.range.clone()] {
                *v *= s;
            }
        }
    }
}

/// Interior target for phase one, relative to each constraint's magnitude.
const INTERIOR_MARGIN: f64 = 1e-6;

/// Solves `model` to the tolerances in `cfg`.
///
/// The returned point is never worse than the start in objective value;
/// errors are reserved for starts that are infeasible or outside the domain.
pub fn solve(model: &SubproblemModel, cfg: &SolverConfig) -> Result<SolveOutcome> {
    let x0 = &model.start;
    let f_start = model.objective.value(x0).ok_or_else(|| Error::Domain("objective undefined at start".into()))?;
    let mut scales = Vec::with_capacity(model.constraints.len());
    let mut active = Vec::new();
    for (k, c) in model.constraints.iter().enumerate() {
        let v = c.value(x0).ok_or(Error::InfeasibleStart { index: k, violation: f64::NAN })?;
        let scale = 1.0 + c.magnitude(x0);
        if v < -cfg.feas_tol * scale {
            return Err(Error::InfeasibleStart { index: k, violation: -v });
        }
        if v < INTERIOR_MARGIN * scale {
            active.push(k);
        }
        scales.push(scale);
    }
    let start_outcome = |status, iterations, optimality| {
        let residual = residual(model, x0, &scales);
        SolveOutcome { x: x0.clone(), objective: f_start, residual, optimality, iterations, status }
    };

    let mut iterations = 0;
    let interior = if active.is_empty() {
        x0.clone()
    } else {
        let (xi, it) = phase_one(model, &active, &scales, cfg);
        iterations += it;
        match xi {
            Some(xi) => xi,
            None => return Ok(start_outcome(SolveStatus::NumericalFailure, iterations, f64::INFINITY)),
        }
    };

    let m = model.constraints.len().max(1) as f64;
    let f_int = model.objective.value(&interior).unwrap_or(f_start);
    let tau0 = m / (1.0 + 0.1 * f_int.abs());
    let path = central_path(&model.objective, &model.constraints, interior, tau0, cfg, &|_| false);
    iterations += path.iterations;
    let mut x = path.x;
    project_power(&mut x, &model.power);
    let objective = model.objective.value(&x).unwrap_or(f64::NEG_INFINITY);
    let res = residual(model, &x, &scales);
    if !(res <= cfg.feas_tol) {
        return Ok(start_outcome(SolveStatus::NumericalFailure, iterations, path.gap));
    }
    if objective < f_start {
        return Ok(start_outcome(path.status, iterations, path.gap));
    }
    Ok(SolveOutcome { x, objective, residual: res, optimality: path.gap, iterations, status: path.status })
}

fn residual(model: &SubproblemModel, x: &[f64], scales: &[f64]) -> f64 {
    model
        .constraints
        .iter()
        .zip(scales)
        .map(|(c, s)| c.value(x).map_or(f64::INFINITY, |v| (-v).max(0.0) / s))
        .fold(0.0, f64::max)
}

/// Maximizes the smallest scaled slack of the nearly active constraints
/// until every constraint clears the interior margin.
fn phase_one(model: &SubproblemModel, active: &[usize], scales: &[f64], cfg: &SolverConfig) -> (Option<Vec<f64>>, usize) {
    let n = model.n;
    let s_var = n;
    let x0 = &model.start;
    let s0 = active
        .iter()
        .map(|&k| model.constraints[k].value(x0).unwrap_or(0.0) / scales[k])
        .fold(f64::INFINITY, f64::min)
        - 1e-2;
    let mut constraints: Vec<Expr> = model
        .constraints
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if active.contains(&k) {
                c.clone().with(-scales[k], Atom::Affine(Affine::var(s_var)))
            } else {
                c.clone()
            }
        })
        .collect();
    // Variables such as an epigraph slack are free in phase one; a ball around
    // the start, of squared radius 1 + |x0|^2, keeps the barrier bounded.
    let ball = Expr::constant(1.0)
        .with(-1.0, Atom::SquaredNorm((0..n).map(|k| vec![(k, 1.0)]).collect()))
        .with(1.0, Atom::Affine(Affine::new(0.0, x0.iter().enumerate().map(|(k, &v)| (k, 2.0 * v)).collect())));
    constraints.push(ball);
    let objective = Expr::constant(0.0).with(1.0, Atom::Affine(Affine::var(s_var)));
    let mut start = x0.clone();
    start.push(s0);
    let ok = |x: &[f64]| {
        model
            .constraints
            .iter()
            .zip(scales)
            .all(|(c, s)| c.value(&x[..n]).is_some_and(|v| v >= INTERIOR_MARGIN * s))
    };
    let path = central_path(&objective, &constraints, start, 1.0, cfg, &ok);
    if ok(&path.x) {
        (Some(path.x[..n].to_vec()), path.iterations)
    } else {
        (None, path.iterations)
    }
}
