//! Exact rate, secrecy and outage-rate functions (all in nats/s/Hz).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{min_norm_sq, BeamformerSet, CVector, ChannelSet, Scenario};
use crate::outage::{gamma_int, ln_gamma_int};
use crate::rootfind::{bisect_lower, bisect_upper, expand_bracket_integer, Bracket};

/// Per-user throughputs, wiretapped throughputs and their difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateVector {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub secrecy: Vec<f64>,
}

impl RateVector {
    pub fn new(f: Vec<f64>, g: Vec<f64>) -> Self {
        let secrecy = f.iter().zip(&g).map(|(a, b)| a - b).collect();
        Self { f, g, secrecy }
    }
}

/// `delta_M` together with the table `Gamma(1..=M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdConstants {
    pub m: usize,
    pub delta_m: f64,
    pub gamma_table: Vec<f64>,
    delta: f64,
    eps: f64,
}

impl ThresholdConstants {
    pub fn new(m: usize, eps: f64, delta: f64) -> Self {
        let mf = m as f64;
        let mean_ln_gamma = (1..=m).map(ln_gamma_int).sum::<f64>() / mf;
        let delta_m =
            (1.0 / eps).ln() + mf.ln() - mean_ln_gamma + 0.5 * (mf - 1.0) * (1.0 / delta).ln();
        Self {
            m,
            delta_m,
            gamma_table: (1..=m).map(gamma_int).collect(),
            delta,
            eps,
        }
    }

    /// `delta * delta_M`, continuous at `delta = 0`.
    pub fn delta_times_delta_m(&self) -> f64 {
        let mf = self.m as f64;
        let mean_ln_gamma = self.gamma_table.iter().map(|g| g.ln()).sum::<f64>() / mf;
        let finite = (1.0 / self.eps).ln() + mf.ln() - mean_ln_gamma;
        if self.delta == 0.0 {
            0.0
        } else {
            self.delta * finite - 0.5 * (mf - 1.0) * self.delta * self.delta.ln()
        }
    }
}

fn sinr_terms(h: &[Vec<CVector>], w: &BeamformerSet, noise: f64, i: usize) -> (f64, f64) {
    let signal = h[i][i].dotc(&w.w[i]).norm_sqr();
    let interference: f64 = (0..w.m())
        .filter(|&j| j != i)
        .map(|j| h[j][i].dotc(&w.w[j]).norm_sqr())
        .sum();
    (signal, interference + noise)
}

/// Instantaneous throughput of user `i` over the direct channels.
pub fn f_user(w: &BeamformerSet, ch: &ChannelSet, scenario: &Scenario, i: usize) -> f64 {
    f_user_on(&ch.direct, w, scenario.sigma_u[i], i)
}

/// Throughput of user `i` over an explicit channel array `h[j][i]`.
pub fn f_user_on(h: &[Vec<CVector>], w: &BeamformerSet, noise: f64, i: usize) -> f64 {
    let (s, d) = sinr_terms(h, w, noise, i);
    (s / d).ln_1p()
}

/// SINR of user `i` over an explicit channel array.
pub fn user_sinr(h: &[Vec<CVector>], w: &BeamformerSet, noise: f64, i: usize) -> f64 {
    let (s, d) = sinr_terms(h, w, noise, i);
    s / d
}

/// SINR of the eavesdropper when decoding user `i` (perfect CSI).
pub fn eve_sinr(w: &BeamformerSet, eve: &[CVector], sigma_e: f64, i: usize) -> f64 {
    let signal = eve[i].dotc(&w.w[i]).norm_sqr();
    let interference: f64 = (0..w.m())
        .filter(|&j| j != i)
        .map(|j| eve[j].dotc(&w.w[j]).norm_sqr())
        .sum();
    signal / (interference + sigma_e)
}

/// Instantaneous wiretapped throughput for user `i`.
pub fn g_eve_instant(w: &BeamformerSet, ch: &ChannelSet, scenario: &Scenario, i: usize) -> Result<f64> {
    Ok(eve_sinr(w, ch.eve_vec()?, scenario.sigma_e, i).ln_1p())
}

/// Throughputs and wiretapped throughputs under perfect CSI.
pub fn instant_rates(w: &BeamformerSet, ch: &ChannelSet, scenario: &Scenario) -> Result<RateVector> {
    let f = (0..w.m()).map(|i| f_user(w, ch, scenario, i)).collect();
    let g = (0..w.m()).map(|i| g_eve_instant(w, ch, scenario, i)).collect::<Result<_>>()?;
    Ok(RateVector::new(f, g))
}

/// Outage function `g_{i,o}(w, r)` for the statistical eavesdropper channel.
///
/// Zero exactly when `Prob(eavesdropper SINR < r) = eps_ev`; strictly
/// increasing in `r`.
pub fn psi_eve(w: &BeamformerSet, ch: &ChannelSet, scenario: &Scenario, i: usize, r: f64) -> Result<f64> {
    let hbar = ch.eve_var()?;
    let wi = w.norm_sq(i);
    if wi <= 0.0 {
        return Err(Error::ZeroBeamformer { user: i });
    }
    if r < 0.0 {
        return Err(Error::Domain(format!("eavesdropper rate must be nonnegative, got {r}")));
    }
    let own = hbar[i] * wi;
    let interference: f64 = (0..w.m())
        .filter(|&j| j != i)
        .map(|j| (r * hbar[j] * w.norm_sq(j) / own).ln_1p())
        .sum();
    Ok(hbar[i] * (-scenario.eps_ev).ln_1p() + scenario.sigma_e * r / wi + hbar[i] * interference)
}

/// The eavesdropper's `eps_ev`-outage SINR for user `i`: the `r` with
/// `0 <= psi_eve(r) <= eps_b`.
pub fn eve_outage_rate(w: &BeamformerSet, ch: &ChannelSet, scenario: &Scenario, i: usize, eps_b: f64) -> Result<f64> {
    let hbar = ch.eve_var()?;
    let wi = w.norm_sq(i);
    if wi <= 0.0 {
        return Err(Error::ZeroBeamformer { user: i });
    }
    // The single-pair root bounds the root from above: interference terms are nonnegative.
    let hi = -(-scenario.eps_ev).ln_1p() * hbar[i] * wi / scenario.sigma_e;
    eve_outage_rate_from(w, ch, scenario, i, eps_b, hi)
}

/// As [`eve_outage_rate`], bisecting on `[0, r_u]`; if `psi(r_u) < 0` the
/// upper end is first pushed up by integer multiples.
pub fn eve_outage_rate_from(
    w: &BeamformerSet,
    ch: &ChannelSet,
    scenario: &Scenario,
    i: usize,
    eps_b: f64,
    r_u: f64,
) -> Result<f64> {
    let psi = |r: f64| psi_eve(w, ch, scenario, i, r);
    let f_hi = psi(r_u)?;
    let bracket = if f_hi >= 0.0 {
        Bracket { lo: 0.0, hi: r_u, f_lo: psi(0.0)?, f_hi }
    } else {
        expand_bracket_integer(psi, r_u.max(f64::MIN_POSITIVE))?
    };
    bisect_upper(psi, bracket, eps_b)
}

/// Deterministic pieces of the robust user-rate condition for one user at
/// fixed beamformers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserRateTerms {
    /// `|hbar_ii^H w_i|^2`.
    pub a: f64,
    /// `(1 - delta)^-1 sum_{j != i} |hbar_ji^H w_j|^2 + sigma_i^2`.
    pub b: f64,
    /// Smallest squared beamformer norm.
    pub wmin: f64,
    /// `(M - 1) / 2`.
    pub half_m1: f64,
    pub delta: f64,
    /// `delta * delta_M`.
    pub delta_delta_m: f64,
}

impl UserRateTerms {
    pub fn new(w: &BeamformerSet, nominal: &[Vec<CVector>], scenario: &Scenario, i: usize) -> Self {
        let m = w.m();
        let a = nominal[i][i].dotc(&w.w[i]).norm_sqr();
        let interference: f64 = (0..m)
            .filter(|&j| j != i)
            .map(|j| nominal[j][i].dotc(&w.w[j]).norm_sqr())
            .sum();
        let consts = ThresholdConstants::new(m, scenario.eps_user, scenario.delta);
        Self {
            a,
            b: interference / (1.0 - scenario.delta) + scenario.sigma_u[i],
            wmin: min_norm_sq(w).0,
            half_m1: 0.5 * (m as f64 - 1.0),
            delta: scenario.delta,
            delta_delta_m: consts.delta_times_delta_m(),
        }
    }

    pub fn phi(&self, big_r: f64) -> Result<f64> {
        if !(big_r > 0.0) {
            return Err(Error::NonpositiveRate(big_r));
        }
        Ok(self.a / big_r - self.b)
    }

    /// `zeta` as a function of `phi`, defined for `phi > 0`.
    pub fn zeta_at_phi(&self, phi: f64) -> Result<f64> {
        if !(phi > 0.0) {
            return Err(Error::Domain(format!("phi = {phi} must be positive")));
        }
        let log_term = if self.half_m1 == 0.0 || self.delta == 0.0 {
            0.0
        } else {
            self.delta * self.half_m1 * self.wmin * (phi / self.wmin).ln()
        };
        Ok(-phi + log_term + self.delta_delta_m * self.wmin)
    }

    pub fn zeta(&self, big_r: f64) -> Result<f64> {
        self.zeta_at_phi(self.phi(big_r)?)
    }

    /// Value of `phi` where `zeta` peaks; `zeta` increases in `R` for
    /// `phi` above it.
    pub fn phi_peak(&self) -> f64 {
        self.delta * self.half_m1 * self.wmin
    }

    /// Rate at which `phi` reaches its peak value (`a / b` when the log term vanishes).
    pub fn rate_cap(&self) -> f64 {
        self.a / (self.b + self.phi_peak())
    }

    /// `zeta` continued by its peak value beyond [`rate_cap`](Self::rate_cap):
    /// nondecreasing on `(0, inf)`, equal to `zeta` on the relevant branch.
    pub fn zeta_clamped(&self, big_r: f64) -> Result<f64> {
        let cap = self.rate_cap();
        if big_r < cap {
            return self.zeta(big_r);
        }
        let peak = self.phi_peak();
        if peak > 0.0 {
            self.zeta_at_phi(peak)
        } else {
            Ok(self.delta_delta_m * self.wmin)
        }
    }
}

/// Exact `phi_i(w, R)` over the nominal channels.
pub fn varphi(w: &BeamformerSet, ch: &ChannelSet, scenario: &Scenario, i: usize, big_r: f64) -> Result<f64> {
    UserRateTerms::new(w, ch.nominal()?, scenario, i).phi(big_r)
}

/// Exact `zeta_i(R)`; requires `phi_i(w, R) > 0`.
pub fn zeta_user(w: &BeamformerSet, ch: &ChannelSet, scenario: &Scenario, i: usize, big_r: f64) -> Result<f64> {
    UserRateTerms::new(w, ch.nominal()?, scenario, i).zeta(big_r)
}

/// Outage-aware SINR of user `i`, seeded at the nominal SINR.
pub fn user_outage_rate(w: &BeamformerSet, ch: &ChannelSet, scenario: &Scenario, i: usize, eps_b: f64) -> Result<f64> {
    let nominal = ch.nominal()?;
    let x0 = user_sinr(nominal, w, scenario.sigma_u[i], i);
    user_outage_rate_from(w, ch, scenario, i, eps_b, x0)
}

/// Root `R` of `zeta_i` with `-eps_b <= zeta_i(R) <= 0`, bracketed by
/// integer expansion from `x0` on the increasing branch of `zeta_i`.
pub fn user_outage_rate_from(
    w: &BeamformerSet,
    ch: &ChannelSet,
    scenario: &Scenario,
    i: usize,
    eps_b: f64,
    x0: f64,
) -> Result<f64> {
    let terms = UserRateTerms::new(w, ch.nominal()?, scenario, i);
    if !(terms.a > 0.0) {
        return Err(Error::ZeroBeamformer { user: i });
    }
    let f = |r: f64| terms.zeta_clamped(r);
    let bracket = expand_bracket_integer(f, x0)?;
    bisect_lower(f, bracket, eps_b)
}

/// `Phi = min_i secrecy_i`.
pub fn objective_maximin(secrecy: &[f64]) -> f64 {
    secrecy.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `Theta = sum_i secrecy_i / pi(w)`.
pub fn objective_see(secrecy: &[f64], total_power: f64) -> f64 {
    secrecy.iter().sum::<f64>() / total_power
}
