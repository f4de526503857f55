//! Subproblem assembly and root tightening for each channel-knowledge regime.

use crate::error::Result;
use crate::model::{ChannelSet, Scenario};
use crate::rates::{eve_outage_rate, eve_outage_rate_from, f_user, instant_rates, user_outage_rate, user_outage_rate_from};
use crate::surrogates::{
    build_a_ub, build_big_a, build_f_lb, build_g_io_lb, build_g_ub, build_robust_constraints, power_constraint,
    trust_norm, ExpansionState, Expr, VarLayout,
};

use super::IterateState;

/// Regime-specific parts of an outer iteration.
pub trait RegimeOps {
    fn scenario(&self) -> &Scenario;

    fn layout(&self, with_t: bool) -> VarLayout;

    /// Per-user concave secrecy surrogates and the convex constraint set
    /// (`expr >= 0`), both built around `st`.
    fn subproblem(&self, st: &IterateState, layout: &VarLayout) -> Result<(Vec<Expr>, Vec<Expr>)>;

    /// Exact iterate from a subproblem solution, with rate variables
    /// re-tightened by root finding.
    fn refine(&self, x: &[f64], layout: &VarLayout, prev: &IterateState) -> Result<IterateState>;
}

fn expansion(st: &IterateState) -> ExpansionState {
    ExpansionState { w: st.w.clone(), r: st.r.clone(), big_r: st.big_r.clone() }
}

fn power_constraints(sc: &Scenario, layout: &VarLayout) -> Vec<Expr> {
    (0..sc.m).map(|i| power_constraint(sc, layout, i)).collect()
}

/// Eavesdropper outage constraints `g_io^k >= 0` and their trust regions.
fn eve_outage_constraints(sc: &Scenario, ch: &ChannelSet, ex: &ExpansionState, layout: &VarLayout) -> Result<Vec<Expr>> {
    let hbar = ch.eve_var()?;
    let mut out = Vec::with_capacity(2 * sc.m);
    for i in 0..sc.m {
        out.push(build_g_io_lb(ex, hbar, sc, layout, i)?.expr);
    }
    if sc.m > 1 {
        out.extend((0..sc.m).map(|j| trust_norm(ex, layout, j)));
    }
    Ok(out)
}

pub struct PerfectOps<'a> {
    sc: &'a Scenario,
    ch: &'a ChannelSet,
}

impl<'a> PerfectOps<'a> {
    pub fn new(sc: &'a Scenario, ch: &'a ChannelSet) -> Self {
        Self { sc, ch }
    }

    pub fn initial_state(&self, w: crate::model::BeamformerSet) -> Result<IterateState> {
        let secrecy = instant_rates(&w, self.ch, self.sc)?.secrecy;
        Ok(IterateState { w, r: None, big_r: None, secrecy })
    }
}

impl RegimeOps for PerfectOps<'_> {
    fn scenario(&self) -> &Scenario {
        self.sc
    }

    fn layout(&self, with_t: bool) -> VarLayout {
        VarLayout { m: self.sc.m, nt: self.sc.nt, has_r: false, has_big_r: false, has_t: with_t }
    }

    fn subproblem(&self, st: &IterateState, layout: &VarLayout) -> Result<(Vec<Expr>, Vec<Expr>)> {
        let ex = expansion(st);
        let eve = self.ch.eve_vec()?;
        let mut terms = Vec::with_capacity(self.sc.m);
        let mut cons = power_constraints(self.sc, layout);
        for i in 0..self.sc.m {
            let f = build_f_lb(&ex, &self.ch.direct, self.sc.sigma_u[i], layout, i)?;
            let g = build_g_ub(&ex, eve, self.sc.sigma_e, layout, i)?;
            terms.push(f.expr.add_scaled(-1.0, &g.expr));
            cons.extend(f.trust);
            cons.extend(g.trust);
        }
        Ok((terms, cons))
    }

    fn refine(&self, x: &[f64], layout: &VarLayout, _prev: &IterateState) -> Result<IterateState> {
        self.initial_state(layout.unpack_w(x))
    }
}

pub struct EvOps<'a> {
    sc: &'a Scenario,
    ch: &'a ChannelSet,
    eps_b: f64,
}

impl<'a> EvOps<'a> {
    pub fn new(sc: &'a Scenario, ch: &'a ChannelSet, eps_b: f64) -> Self {
        Self { sc, ch, eps_b }
    }

    fn state(&self, w: crate::model::BeamformerSet, r: Vec<f64>) -> IterateState {
        let secrecy = (0..self.sc.m).map(|i| f_user(&w, self.ch, self.sc, i) - r[i].ln_1p()).collect();
        IterateState { w, r: Some(r), big_r: None, secrecy }
    }

    pub fn initial_state(&self, w: crate::model::BeamformerSet) -> Result<IterateState> {
        let r = (0..self.sc.m)
            .map(|i| eve_outage_rate(&w, self.ch, self.sc, i, self.eps_b))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.state(w, r))
    }
}

impl RegimeOps for EvOps<'_> {
    fn scenario(&self) -> &Scenario {
        self.sc
    }

    fn layout(&self, with_t: bool) -> VarLayout {
        VarLayout { m: self.sc.m, nt: self.sc.nt, has_r: true, has_big_r: false, has_t: with_t }
    }

    fn subproblem(&self, st: &IterateState, layout: &VarLayout) -> Result<(Vec<Expr>, Vec<Expr>)> {
        let ex = expansion(st);
        let mut terms = Vec::with_capacity(self.sc.m);
        let mut cons = power_constraints(self.sc, layout);
        for i in 0..self.sc.m {
            let f = build_f_lb(&ex, &self.ch.direct, self.sc.sigma_u[i], layout, i)?;
            let a = build_a_ub(&ex, layout, i)?;
            terms.push(f.expr.add_scaled(-1.0, &a.expr));
            cons.extend(f.trust);
        }
        cons.extend(eve_outage_constraints(self.sc, self.ch, &ex, layout)?);
        Ok((terms, cons))
    }

    fn refine(&self, x: &[f64], layout: &VarLayout, _prev: &IterateState) -> Result<IterateState> {
        let w = layout.unpack_w(x);
        let r_u = layout.unpack_r(x);
        let r = (0..self.sc.m)
            .map(|i| eve_outage_rate_from(&w, self.ch, self.sc, i, self.eps_b, r_u[i]))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.state(w, r))
    }
}

pub struct UserOps<'a> {
    sc: &'a Scenario,
    ch: &'a ChannelSet,
    eps_b: f64,
}

impl<'a> UserOps<'a> {
    pub fn new(sc: &'a Scenario, ch: &'a ChannelSet, eps_b: f64) -> Self {
        Self { sc, ch, eps_b }
    }

    fn state(w: crate::model::BeamformerSet, r: Vec<f64>, big_r: Vec<f64>) -> IterateState {
        let secrecy = big_r.iter().zip(&r).map(|(a, b)| a.ln_1p() - b.ln_1p()).collect();
        IterateState { w, r: Some(r), big_r: Some(big_r), secrecy }
    }

    /// Lifts beamformers and eavesdropper rates by solving for the
    /// guaranteed user SINRs, seeded at the nominal SINRs.
    pub fn initial_state(&self, w: crate::model::BeamformerSet, r: Vec<f64>) -> Result<IterateState> {
        let big_r = (0..self.sc.m)
            .map(|i| user_outage_rate(&w, self.ch, self.sc, i, self.eps_b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::state(w, r, big_r))
    }
}

impl RegimeOps for UserOps<'_> {
    fn scenario(&self) -> &Scenario {
        self.sc
    }

    fn layout(&self, with_t: bool) -> VarLayout {
        VarLayout { m: self.sc.m, nt: self.sc.nt, has_r: true, has_big_r: true, has_t: with_t }
    }

    fn subproblem(&self, st: &IterateState, layout: &VarLayout) -> Result<(Vec<Expr>, Vec<Expr>)> {
        let ex = expansion(st);
        let nominal = self.ch.nominal()?;
        let mut terms = Vec::with_capacity(self.sc.m);
        for i in 0..self.sc.m {
            let a = build_a_ub(&ex, layout, i)?;
            terms.push(build_big_a(layout, i).expr.add_scaled(-1.0, &a.expr));
        }
        let mut cons = power_constraints(self.sc, layout);
        cons.extend(eve_outage_constraints(self.sc, self.ch, &ex, layout)?);
        cons.extend(build_robust_constraints(&ex, nominal, self.sc, layout)?);
        Ok((terms, cons))
    }

    fn refine(&self, x: &[f64], layout: &VarLayout, _prev: &IterateState) -> Result<IterateState> {
        let w = layout.unpack_w(x);
        let r_u = layout.unpack_r(x);
        let big_r_l = layout.unpack_big_r(x);
        let r = (0..self.sc.m)
            .map(|i| eve_outage_rate_from(&w, self.ch, self.sc, i, self.eps_b, r_u[i]))
            .collect::<Result<Vec<_>>>()?;
        let big_r = (0..self.sc.m)
            .map(|i| user_outage_rate_from(&w, self.ch, self.sc, i, self.eps_b, big_r_l[i]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::state(w, r, big_r))
    }
}
