//! Outage probabilities of SINRs whose interference is a weighted sum of
//! unit exponentials, the rate thresholds derived from them, and Monte-Carlo
//! estimators used to check both.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{complex_normal_vector, BeamformerSet, CVector};
use crate::rates::{ThresholdConstants, UserRateTerms};
use crate::rootfind::{bisect_lower, expand_bracket_integer};

/// `Prob(a / (delta sum_i norms_i p_i + b) < r)` with `p_i ~ Exp(1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageQuery {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub delta: f64,
    /// Squared beamformer norms `||w_i||^2`.
    pub norms: Vec<f64>,
}

impl OutageQuery {
    pub fn with_rate(&self, r: f64) -> Self {
        Self { r, ..self.clone() }
    }

    fn m(&self) -> usize {
        self.norms.len()
    }

    fn wmin(&self) -> f64 {
        self.norms.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn wmax(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }

    /// `a / r - b`, the slack the interference has to exceed.
    fn excess(&self) -> f64 {
        self.a / self.r - self.b
    }
}

/// `ln Gamma(n) = ln (n - 1)!` for integer `n >= 1`.
pub fn ln_gamma_int(n: usize) -> f64 {
    assert!(n >= 1, "Gamma is evaluated at positive integers only");
    (2..n).map(|k| (k as f64).ln()).sum()
}

/// `(n-1)!`, exact while it fits in the mantissa.
pub fn gamma_int(n: usize) -> f64 {
    assert!(n >= 1, "Gamma is evaluated at positive integers only");
    (2..n).map(|k| k as f64).product()
}

/// `e^-y sum_{i=1}^M y^(i-1) / Gamma(i)`, the tail of an Erlang(M, 1) variable.
pub fn erlang_tail(m: usize, y: f64) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    let ly = y.ln();
    let logs: Vec<f64> = (1..=m).map(|i| -y + (i - 1) as f64 * ly - ln_gamma_int(i)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail = (top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()).exp();
    tail.min(1.0)
}

fn bound_with_norm(q: &OutageQuery, norm: f64) -> f64 {
    let x = q.excess();
    // The SINR never exceeds a / b, so any rate at or above it is always missed.
    if !(x > 0.0) {
        return 1.0;
    }
    erlang_tail(q.m(), x / (q.delta * norm))
}

/// Lower bound on the outage probability: every weight replaced by the smallest norm.
pub fn outage_lower(q: &OutageQuery) -> f64 {
    bound_with_norm(q, q.wmin())
}

/// Upper bound on the outage probability: every weight replaced by the largest norm.
pub fn outage_upper(q: &OutageQuery) -> f64 {
    bound_with_norm(q, q.wmax())
}

/// Binomial estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    fn from_hits(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self { estimate: p, std_error: (p * (1.0 - p) / n as f64).sqrt(), samples: n }
    }

    /// `|estimate - target| <= k * std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.std_error
    }
}

fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    Exp1.sample(rng)
}

/// Monte-Carlo estimate of the probability described by `q`.
pub fn mc_outage(q: &OutageQuery, n_samples: usize, seed: u64) -> McEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0;
    for _ in 0..n_samples {
        let x: f64 = q.norms.iter().map(|w| w * exp1(&mut rng)).sum();
        if q.a / (q.delta * x + q.b) < q.r {
            hits += 1;
        }
    }
    McEstimate::from_hits(hits, n_samples)
}

fn rate_terms(q: &OutageQuery, eps: f64) -> UserRateTerms {
    let consts = ThresholdConstants::new(q.m(), eps, q.delta);
    UserRateTerms {
        a: q.a,
        b: q.b,
        wmin: q.wmin(),
        half_m1: 0.5 * (q.m() as f64 - 1.0),
        delta: q.delta,
        delta_delta_m: consts.delta_times_delta_m(),
    }
}

/// Rate constraint derived from the smallest-norm bound, evaluated at `q.r`;
/// nonpositive exactly on the admissible rates.
pub fn cauchy_threshold_constraint(q: &OutageQuery, eps: f64) -> Result<f64> {
    let x = q.excess();
    if !(x > 0.0) || !(q.r > 0.0) {
        return Err(Error::Domain(format!("a / r - b = {x} must be positive")));
    }
    let t = rate_terms(q, eps);
    Ok(t.zeta_at_phi(x)? / t.wmin)
}

/// Largest rate on the left branch satisfying
/// [`cauchy_threshold_constraint`] `<= 0`, or `a / b` if the constraint never
/// becomes positive. `q.r` is ignored.
pub fn threshold_rate(q: &OutageQuery, eps: f64, eps_b: f64) -> Result<f64> {
    let t = rate_terms(q, eps);
    let peak = if t.phi_peak() > 0.0 {
        t.zeta_at_phi(t.phi_peak())?
    } else {
        t.delta_delta_m * t.wmin
    };
    if peak <= 0.0 {
        return Ok(q.a / q.b);
    }
    let f = |r: f64| t.zeta_clamped(r);
    let bracket = expand_bracket_integer(f, t.rate_cap())?;
    bisect_lower(f, bracket, eps_b * t.wmin)
}

/// Safe rate certified by the Bernstein-type deviation bound.
pub fn bernstein_rate(norms: &[f64], a: f64, b: f64, delta: f64, eps: f64) -> f64 {
    let l = (1.0 / eps).ln();
    let sum: f64 = norms.iter().sum();
    let sum_sq: f64 = norms.iter().map(|w| w * w).sum();
    let wmax = norms.iter().copied().fold(0.0, f64::max);
    a / (b + delta * (sum + 2.0 * sum_sq.sqrt() * l.sqrt() + 2.0 * wmax * l))
}

/// Both sides of `1 / (x (1 + x)^M) = 1 / x - sum_{i=1}^M (1 + x)^-i`.
pub fn partial_fraction_check(x: f64, m: usize) -> (f64, f64) {
    let lhs = 1.0 / (x * (1.0 + x).powi(m as i32));
    let rhs = 1.0 / x - (1..=m).map(|i| (1.0 + x).powi(-(i as i32))).sum::<f64>();
    (lhs, rhs)
}

/// Monte-Carlo `Prob(eavesdropper SINR < r)` for user `i` with Rayleigh
/// eavesdropper channels of variances `eve_var`.
pub fn mc_eve_outage(
    w: &BeamformerSet,
    eve_var: &[f64],
    sigma_e: f64,
    i: usize,
    r: f64,
    n_samples: usize,
    seed: u64,
) -> McEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale: Vec<f64> = (0..w.m()).map(|j| eve_var[j] * w.norm_sq(j)).collect();
    let mut hits = 0;
    for _ in 0..n_samples {
        let mut signal = 0.0;
        let mut interference = sigma_e;
        for (j, s) in scale.iter().enumerate() {
            let v = s * exp1(&mut rng);
            if j == i {
                signal = v;
            } else {
                interference += v;
            }
        }
        if signal / interference < r {
            hits += 1;
        }
    }
    McEstimate::from_hits(hits, n_samples)
}

/// Monte-Carlo `Prob(true SINR_i < big_r)` when every channel is its nominal
/// value plus `delta` times a `CN(0, I)` error.
#[allow(clippy::too_many_arguments)]
pub fn mc_user_outage(
    w: &BeamformerSet,
    nominal: &[Vec<CVector>],
    sigma: f64,
    delta: f64,
    i: usize,
    big_r: f64,
    n_samples: usize,
    seed: u64,
) -> McEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nt = w.nt();
    let signal = nominal[i][i].dotc(&w.w[i]).norm_sqr();
    let mut hits = 0;
    for _ in 0..n_samples {
        let mut den = sigma;
        for (j, (hj, wj)) in nominal.iter().zip(&w.w).enumerate() {
            let chi = complex_normal_vector(&mut rng, nt);
            den += if j == i {
                delta * chi.dotc(wj).norm_sqr()
            } else {
                (&hj[i] + chi * num_complex::Complex64::from(delta)).dotc(wj).norm_sqr()
            };
        }
        if signal / den < big_r {
            hits += 1;
        }
    }
    McEstimate::from_hits(hits, n_samples)
}
