//! Concave minorants and convex majorants of the rate functions around an
//! expansion point, expressed as [`Expr`]s over stacked real coordinates.
//!
//! Every builder returns a [`BoundFunction`]: the bound itself plus the
//! trust-region constraints (`>= 0` form) on which it is valid.

pub mod atoms;

use std::ops::Range;

pub use atoms::{Affine, Atom, Expr, Lin};

use crate::error::{Error, Result};
use crate::model::{min_norm_sq, BeamformerSet, CVector, Scenario};
use crate::rates::ThresholdConstants;

/// Trust-region margins are this fraction of the value at the expansion point.
pub const TRUST_MARGIN: f64 = 1e-6;

/// `ln(1 + 1/(x y)) >= ln(1 + 1/(xb yb)) + s/(1+s) (2 - x/xb - y/yb)`, `s = 1/(xb yb)`.
pub fn lb_log_inv_product(x: f64, y: f64, xb: f64, yb: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0 && xb > 0.0 && yb > 0.0) {
        return Err(Error::Domain("arguments must be positive".into()));
    }
    let s = 1.0 / (xb * yb);
    Ok(s.ln_1p() + s / (1.0 + s) * (2.0 - x / xb - y / yb))
}

/// `ln(1 + x/y) <= ln(1 + xb/yb) + (x/y - xb/yb) / (1 + xb/yb)`.
pub fn ub_log_ratio(x: f64, y: f64, xb: f64, yb: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0 && xb > 0.0 && yb > 0.0) {
        return Err(Error::Domain("arguments must be positive".into()));
    }
    let s = xb / yb;
    Ok(s.ln_1p() + (x / y - s) / (1.0 + s))
}

/// `r / w >= 2 sqrt(rb) / wb sqrt(r) - rb / wb^2 w`, where `w` stands for a
/// squared norm.
pub fn lb_ratio_sqrt(r: f64, w: f64, rb: f64, wb: f64) -> Result<f64> {
    if !(r > 0.0 && rb > 0.0 && wb > 0.0 && w >= 0.0) {
        return Err(Error::Domain("rates and reference norm must be positive".into()));
    }
    Ok(2.0 * rb.sqrt() / wb * r.sqrt() - rb / (wb * wb) * w)
}

/// Positions of the optimization variables in the real vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub m: usize,
    pub nt: usize,
    pub has_r: bool,
    pub has_big_r: bool,
    pub has_t: bool,
}

impl VarLayout {
    pub fn w_len(&self) -> usize {
        2 * self.m * self.nt
    }

    pub fn w_block(&self, i: usize) -> Range<usize> {
        2 * self.nt * i..2 * self.nt * (i + 1)
    }

    pub fn w_re(&self, i: usize, k: usize) -> usize {
        2 * self.nt * i + k
    }

    pub fn w_im(&self, i: usize, k: usize) -> usize {
        2 * self.nt * i + self.nt + k
    }

    pub fn r(&self, i: usize) -> usize {
        debug_assert!(self.has_r);
        self.w_len() + i
    }

    pub fn big_r(&self, i: usize) -> usize {
        debug_assert!(self.has_big_r);
        self.w_len() + if self.has_r { self.m } else { 0 } + i
    }

    pub fn t(&self) -> usize {
        debug_assert!(self.has_t);
        self.n() - 1
    }

    pub fn n(&self) -> usize {
        self.w_len()
            + if self.has_r { self.m } else { 0 }
            + if self.has_big_r { self.m } else { 0 }
            + usize::from(self.has_t)
    }

    pub fn pack(&self, w: &BeamformerSet, r: Option<&[f64]>, big_r: Option<&[f64]>, t: Option<f64>) -> Vec<f64> {
        let mut x = w.to_real();
        if self.has_r {
            x.extend_from_slice(r.expect("layout has r"));
        }
        if self.has_big_r {
            x.extend_from_slice(big_r.expect("layout has R"));
        }
        if self.has_t {
            x.push(t.unwrap_or(0.0));
        }
        x
    }

    pub fn unpack_w(&self, x: &[f64]) -> BeamformerSet {
        BeamformerSet::from_real(x, self.m, self.nt)
    }

    pub fn unpack_r(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m).map(|i| x[self.r(i)]).collect()
    }

    pub fn unpack_big_r(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m).map(|i| x[self.big_r(i)]).collect()
    }

    /// `Re(a^H w_i)`.
    pub fn re_inner(&self, a: &CVector, i: usize) -> Lin {
        let mut l = Vec::with_capacity(2 * self.nt);
        for k in 0..self.nt {
            l.push((self.w_re(i, k), a[k].re));
            l.push((self.w_im(i, k), a[k].im));
        }
        l
    }

    /// Rows whose squares sum to `|h^H w_i|^2`.
    pub fn abs2_rows(&self, h: &CVector, i: usize) -> Vec<Lin> {
        let im = (0..self.nt)
            .flat_map(|k| [(self.w_re(i, k), -h[k].im), (self.w_im(i, k), h[k].re)])
            .collect();
        vec![self.re_inner(h, i), im]
    }

    /// Rows whose squares sum to `||w_i||^2`.
    pub fn norm_rows(&self, i: usize) -> Vec<Lin> {
        self.w_block(i).map(|k| vec![(k, 1.0)]).collect()
    }

    /// `2 Re{wb^H h h^H w_i} - |h^H wb|^2`, the tangent of `|h^H w_i|^2` at `wb`.
    pub fn tangent_abs2(&self, h: &CVector, wb: &CVector, i: usize) -> Affine {
        let c = h.dotc(wb);
        let a = h * c;
        Affine::new(-c.norm_sqr(), self.re_inner(&a, i).into_iter().map(|(k, v)| (k, 2.0 * v)).collect())
    }

    /// `2 Re{wb^H w_j} - ||wb||^2`, the tangent of `||w_j||^2` at `wb`.
    pub fn tangent_norm(&self, wb: &CVector, j: usize) -> Affine {
        Affine::new(
            -wb.norm_squared(),
            self.re_inner(wb, j).into_iter().map(|(k, v)| (k, 2.0 * v)).collect(),
        )
    }
}

/// Point around which the bounds are built.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionState {
    pub w: BeamformerSet,
    pub r: Option<Vec<f64>>,
    pub big_r: Option<Vec<f64>>,
}

impl ExpansionState {
    pub fn new(w: BeamformerSet) -> Self {
        Self { w, r: None, big_r: None }
    }

    fn r(&self, i: usize) -> Result<f64> {
        let r = self.r.as_ref().ok_or(Error::DegenerateExpansion("no eavesdropper rates".into()))?[i];
        if !(r > 0.0) {
            return Err(Error::DegenerateExpansion(format!("r_{i} = {r} must be positive")));
        }
        Ok(r)
    }

    fn big_r(&self, i: usize) -> Result<f64> {
        let r = self.big_r.as_ref().ok_or(Error::DegenerateExpansion("no user rates".into()))?[i];
        if !(r > 0.0) {
            return Err(Error::NonpositiveRate(r));
        }
        Ok(r)
    }
}

/// A bound together with the constraints (`expr >= 0`) that keep it valid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundFunction {
    pub expr: Expr,
    pub trust: Vec<Expr>,
}

impl BoundFunction {
    fn plain(expr: Expr) -> Self {
        Self { expr, trust: Vec::new() }
    }
}

fn interference_rows(h: &[Vec<CVector>], layout: &VarLayout, i: usize) -> Vec<Lin> {
    (0..layout.m)
        .filter(|&j| j != i)
        .flat_map(|j| layout.abs2_rows(&h[j][i], j))
        .collect()
}

fn interference_value(h: &[Vec<CVector>], w: &BeamformerSet, i: usize) -> f64 {
    (0..w.m()).filter(|&j| j != i).map(|j| h[j][i].dotc(&w.w[j]).norm_sqr()).sum()
}

/// Concave minorant of `ln(1 + SINR_i)` over the channels `h[j][i]`.
pub fn build_f_lb(
    state: &ExpansionState,
    h: &[Vec<CVector>],
    sigma: f64,
    layout: &VarLayout,
    i: usize,
) -> Result<BoundFunction> {
    let wb = &state.w;
    let signal = h[i][i].dotc(&wb.w[i]).norm_sqr();
    if !(signal > 0.0) {
        return Err(Error::DegenerateExpansion(format!("no signal power for user {i}")));
    }
    let ibar = interference_value(h, wb, i) + sigma;
    let x = signal / ibar;
    let y = x / (1.0 + x);
    let tangent = layout.tangent_abs2(&h[i][i], &wb.w[i], i);
    let mut expr = Expr::constant(x.ln_1p() + 2.0 * y - y * sigma / ibar);
    expr.push(-y * signal, Atom::ReciprocalAffine(tangent.clone()));
    if layout.m > 1 {
        expr.push(-y / ibar, Atom::SquaredNorm(interference_rows(h, layout, i)));
    }
    let trust = Expr::constant(-TRUST_MARGIN * signal).with(1.0, Atom::Affine(tangent));
    Ok(BoundFunction { expr, trust: vec![trust] })
}

/// Convex majorant of `ln(1 + SINR_e,i)` for known eavesdropper channels.
pub fn build_g_ub(
    state: &ExpansionState,
    eve: &[CVector],
    sigma_e: f64,
    layout: &VarLayout,
    i: usize,
) -> Result<BoundFunction> {
    let wb = &state.w;
    let others: Vec<usize> = (0..layout.m).filter(|&j| j != i).collect();
    let leak: f64 = others.iter().map(|&j| eve[j].dotc(&wb.w[j]).norm_sqr()).sum();
    let xe = eve[i].dotc(&wb.w[i]).norm_sqr() / (leak + sigma_e);
    let mut den = Affine::constant(sigma_e);
    for &j in &others {
        den = den.plus(&layout.tangent_abs2(&eve[j], &wb.w[j], j));
    }
    let mut trust = Vec::new();
    if leak > 0.0 {
        trust.push(
            Expr::constant(-TRUST_MARGIN * leak - sigma_e)
                .with(1.0, Atom::Affine(den.clone())),
        );
    }
    let expr = Expr::constant(xe.ln_1p() - xe / (1.0 + xe)).with(
        1.0 / (1.0 + xe),
        Atom::QuadOverAffine { num: layout.abs2_rows(&eve[i], i), den },
    );
    Ok(BoundFunction { expr, trust })
}

/// `2 Re{wb_j^H w_j} - ||wb_j||^2 >= eta`.
pub fn trust_norm(state: &ExpansionState, layout: &VarLayout, j: usize) -> Expr {
    let wb = &state.w.w[j];
    Expr::constant(-TRUST_MARGIN * wb.norm_squared()).with(1.0, Atom::Affine(layout.tangent_norm(wb, j)))
}

/// Concave minorant of `ln(1 + r_i hbar_j ||w_j||^2 / (hbar_i ||w_i||^2))`.
pub fn build_lambda_lb(
    state: &ExpansionState,
    eve_var: &[f64],
    layout: &VarLayout,
    i: usize,
    j: usize,
) -> Result<BoundFunction> {
    let rb = state.r(i)?;
    let (wi, wj) = (state.w.norm_sq(i), state.w.norm_sq(j));
    if !(wi > 0.0 && wj > 0.0) {
        return Err(Error::DegenerateExpansion(format!("zero beamformer among users {i}, {j}")));
    }
    let x = rb * eve_var[j] * wj / (eve_var[i] * wi);
    let y = x / (1.0 + x);
    let expr = Expr::constant(x.ln_1p() + 2.0 * y)
        .with(
            -y * rb * wj,
            Atom::ReciprocalBilinear { var: layout.r(i), den: layout.tangent_norm(&state.w.w[j], j) },
        )
        .with(-y / wi, Atom::SquaredNorm(layout.norm_rows(i)));
    Ok(BoundFunction { expr, trust: vec![trust_norm(state, layout, j)] })
}

/// Concave minorant of the eavesdropper outage function in `(w, r_i)`.
/// Trust regions `trust_norm(j)` for `j != i` are left to the caller.
pub fn build_g_io_lb(
    state: &ExpansionState,
    eve_var: &[f64],
    scenario: &Scenario,
    layout: &VarLayout,
    i: usize,
) -> Result<BoundFunction> {
    let rb = state.r(i)?;
    let wb = state.w.norm_sq(i);
    if !(wb > 0.0) {
        return Err(Error::DegenerateExpansion(format!("zero beamformer for user {i}")));
    }
    let hi = eve_var[i];
    let mut expr = Expr::constant(hi * (-scenario.eps_ev).ln_1p())
        .with(scenario.sigma_e * 2.0 * rb.sqrt() / wb, Atom::Sqrt(layout.r(i)))
        .with(-scenario.sigma_e * rb / (wb * wb), Atom::SquaredNorm(layout.norm_rows(i)));
    for j in (0..layout.m).filter(|&j| j != i) {
        expr = expr.add_scaled(hi, &build_lambda_lb(state, eve_var, layout, i, j)?.expr);
    }
    Ok(BoundFunction::plain(expr))
}

/// Tangent majorant of `ln(1 + r_i)`.
pub fn build_a_ub(state: &ExpansionState, layout: &VarLayout, i: usize) -> Result<BoundFunction> {
    let rb = state.r.as_ref().ok_or(Error::DegenerateExpansion("no eavesdropper rates".into()))?[i];
    if !(rb >= 0.0) {
        return Err(Error::Domain(format!("r_{i} = {rb} must be nonnegative")));
    }
    Ok(BoundFunction::plain(
        Expr::constant(rb.ln_1p() - rb / (1.0 + rb)).with(1.0 / (1.0 + rb), Atom::Affine(Affine::var(layout.r(i)))),
    ))
}

/// Affine minorant of `|hbar_ii^H w_i|^2 / R_i`.
pub fn build_ell_lb(
    state: &ExpansionState,
    nominal: &[Vec<CVector>],
    layout: &VarLayout,
    i: usize,
) -> Result<BoundFunction> {
    let rb = state.big_r(i)?;
    let h = &nominal[i][i];
    let c = h.dotc(&state.w.w[i]);
    let mut a: Lin = layout.re_inner(&(h * c), i).into_iter().map(|(k, v)| (k, 2.0 * v / rb)).collect();
    a.push((layout.big_r(i), -c.norm_sqr() / (rb * rb)));
    Ok(BoundFunction::plain(Expr::constant(0.0).with(1.0, Atom::Affine(Affine::new(0.0, a)))))
}

/// Concave minorant of `phi_i(w, R_i)`.
pub fn build_varphi_lb(
    state: &ExpansionState,
    nominal: &[Vec<CVector>],
    scenario: &Scenario,
    layout: &VarLayout,
    i: usize,
) -> Result<BoundFunction> {
    let mut expr = build_ell_lb(state, nominal, layout, i)?.expr.add_const(-scenario.sigma_u[i]);
    if layout.m > 1 {
        expr.push(-1.0 / (1.0 - scenario.delta), Atom::SquaredNorm(interference_rows(nominal, layout, i)));
    }
    Ok(BoundFunction::plain(expr))
}

/// Convex inner approximation of the robust user-rate constraints: per user,
/// `phi^k >= eta` and the scaled `phi^k` dominating the smallest-norm term,
/// followed by `R_i >= 0`.
pub fn build_robust_constraints(
    state: &ExpansionState,
    nominal: &[Vec<CVector>],
    scenario: &Scenario,
    layout: &VarLayout,
) -> Result<Vec<Expr>> {
    let m = layout.m;
    let consts = ThresholdConstants::new(m, scenario.eps_user, scenario.delta);
    let half_m1 = 0.5 * (m as f64 - 1.0);
    let delta = scenario.delta;
    let (wmin, imin) = min_norm_sq(&state.w);
    if !(wmin > 0.0) {
        return Err(Error::DegenerateExpansion("zero beamformer".into()));
    }
    let mut out = Vec::with_capacity(3 * m);
    for i in 0..m {
        let phi_lb = build_varphi_lb(state, nominal, scenario, layout, i)?.expr;
        let bar = state.big_r(i)?;
        let x_eval = layout.pack(&state.w, state.r.as_deref(), state.big_r.as_deref(), Some(0.0));
        let phi_bar = phi_lb.value(&x_eval).unwrap_or(f64::NAN);
        if !(phi_bar > 0.0) {
            return Err(Error::DegenerateExpansion(format!(
                "phi_{i} = {phi_bar} at R = {bar} must be positive"
            )));
        }
        let x = phi_bar / wmin;
        let scale_coef = 1.0 - delta * half_m1 / x;
        let (log_coef, norm_coef) = if delta > 0.0 {
            let lc = half_m1 * (x.ln() - 1.0) + consts.delta_m;
            (lc, delta * lc)
        } else {
            (f64::INFINITY, 0.0)
        };
        if log_coef < 0.0 || scale_coef < 0.0 {
            return Err(Error::GuardViolation { user: i, log_coef, scale_coef });
        }
        out.push(phi_lb.clone().add_const(-TRUST_MARGIN * phi_bar));
        out.push(
            Expr::constant(0.0)
                .add_scaled(scale_coef, &phi_lb)
                .with(-norm_coef, Atom::SquaredNorm(layout.norm_rows(imin))),
        );
    }
    for i in 0..m {
        out.push(Expr::constant(0.0).with(1.0, Atom::Affine(Affine::var(layout.big_r(i)))));
    }
    Ok(out)
}

/// `ln(1 + R_i)`, used as is.
pub fn build_big_a(layout: &VarLayout, i: usize) -> BoundFunction {
    BoundFunction::plain(Expr::constant(0.0).with(1.0, Atom::Log1p(layout.big_r(i))))
}

/// `P_i - ||w_i||^2 >= 0`.
pub fn power_constraint(scenario: &Scenario, layout: &VarLayout, i: usize) -> Expr {
    Expr::constant(scenario.power[i]).with(-1.0, Atom::SquaredNorm(layout.norm_rows(i)))
}

/// `zeta sum ||w_i||^2 + Pc`.
pub fn total_power_expr(scenario: &Scenario, layout: &VarLayout) -> Expr {
    let rows = (0..layout.m).flat_map(|i| layout.norm_rows(i)).collect();
    Expr::constant(scenario.pc).with(scenario.zeta, Atom::SquaredNorm(rows))
}
