//! Network scenario, channel sets and beamformer containers.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex column vector of length `Nt`.
pub type CVector = DVector<Complex64>;

/// Per-antenna circuit power used by the simulation defaults (mW).
pub const ANTENNA_CIRCUIT_POWER_MW: f64 = 1.25;

/// Channel-knowledge regime of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Every channel, including the eavesdropper's, is known exactly.
    PerfectCsi,
    /// User channels known; eavesdropper channels known only in distribution.
    EvOutage,
    /// As `EvOutage`, and user channels carry Gaussian estimation errors.
    UserOutage,
}

/// All fixed parameters of one network instance.
///
/// Powers are in mW and rates in nats/s/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub m: usize,
    pub nt: usize,
    /// Per-transmitter power limits `P_i`.
    pub power: Vec<f64>,
    /// User noise powers `sigma_i^2`.
    pub sigma_u: Vec<f64>,
    /// Eavesdropper noise power.
    pub sigma_e: f64,
    /// Amplifier scaling, the reciprocal of drain efficiency.
    pub zeta: f64,
    /// Total circuit power.
    pub pc: f64,
    /// QoS thresholds `c_i` in nats/s/Hz.
    pub qos: Vec<f64>,
    pub eps_ev: f64,
    pub eps_user: f64,
    pub delta: f64,
    /// Variance scale `hbar_je` used when sampling statistical eavesdropper channels.
    pub eve_var: f64,
    pub regime: Regime,
}

impl Scenario {
    /// Simulation defaults: `Nt = 4`, unit noise, 40% drain efficiency,
    /// 1.25 mW circuit power per antenna, `delta = 0.001`, `eps = 0.1`,
    /// and the per-`M` QoS thresholds (2, 1 and 0.6 bps/Hz for M = 2, 5, 6).
    pub fn simulation_defaults(m: usize, regime: Regime, power_mw: f64) -> Self {
        let nt = 4;
        let qos_bps = default_qos_bps(m);
        Self {
            m,
            nt,
            power: vec![power_mw; m],
            sigma_u: vec![1.0; m],
            sigma_e: 1.0,
            zeta: 1.0 / 0.4,
            pc: (m * nt) as f64 * ANTENNA_CIRCUIT_POWER_MW,
            qos: vec![qos_bps * std::f64::consts::LN_2; m],
            eps_ev: 0.1,
            eps_user: 0.1,
            delta: 1e-3,
            eve_var: 1.0,
            regime,
        }
    }

    pub fn with_regime(mut self, regime: Regime) -> Self {
        self.regime = regime;
        self
    }

    pub fn with_power(mut self, power_mw: f64) -> Self {
        self.power = vec![power_mw; self.m];
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.m == 0 || self.nt == 0 {
            return bad(format!("M = {} and Nt = {} must be positive", self.m, self.nt));
        }
        for (name, v) in [("power", &self.power), ("sigma_u", &self.sigma_u), ("qos", &self.qos)] {
            if v.len() != self.m {
                return bad(format!("{name} has {} entries, expected {}", v.len(), self.m));
            }
        }
        if self.power.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return bad("power limits must be positive".into());
        }
        if self.sigma_u.iter().any(|&s| !(s > 0.0)) || !(self.sigma_e > 0.0) {
            return bad("noise powers must be positive".into());
        }
        if self.qos.iter().any(|&c| !(c >= 0.0)) {
            return bad("QoS thresholds must be nonnegative".into());
        }
        if !(self.eps_ev > 0.0 && self.eps_ev < 1.0) || !(self.eps_user > 0.0 && self.eps_user < 1.0)
        {
            return bad("outage levels must lie in (0, 1)".into());
        }
        if !(self.delta > 0.0) || !(self.zeta > 0.0) || !(self.pc >= 0.0) || !(self.eve_var > 0.0) {
            return bad("delta, zeta and eve_var must be positive, Pc nonnegative".into());
        }
        Ok(())
    }
}

/// QoS threshold in bps/Hz used by the simulations for a given number of pairs.
pub fn default_qos_bps(m: usize) -> f64 {
    match m {
        0..=2 => 2.0,
        3..=5 => 1.0,
        _ => 0.6,
    }
}

/// Seed for the deterministic channel generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunSeed(pub u64);

/// Channels of one network instance.
///
/// `direct[j][i]` is the channel from transmitter `j` to user `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub direct: Vec<Vec<CVector>>,
    /// Eavesdropper channel vectors `h_ie` (perfect CSI).
    pub eve_vec: Option<Vec<CVector>>,
    /// Eavesdropper channel variances `hbar_je` (statistical CSI).
    pub eve_var: Option<Vec<f64>>,
    /// Nominal user channels for the uncertain-user regime.
    pub nominal: Option<Vec<Vec<CVector>>>,
}

impl ChannelSet {
    pub fn m(&self) -> usize {
        self.direct.len()
    }

    pub fn eve_vec(&self) -> Result<&[CVector]> {
        self.eve_vec.as_deref().ok_or(Error::MissingChannels("eavesdropper channel vectors"))
    }

    pub fn eve_var(&self) -> Result<&[f64]> {
        self.eve_var.as_deref().ok_or(Error::MissingChannels("eavesdropper channel variances"))
    }

    pub fn nominal(&self) -> Result<&[Vec<CVector>]> {
        self.nominal.as_deref().ok_or(Error::MissingChannels("nominal user channels"))
    }

    /// User channels the transmitters design against under `regime`.
    pub fn user_channels(&self, regime: Regime) -> Result<&[Vec<CVector>]> {
        match regime {
            Regime::UserOutage => self.nominal(),
            _ => Ok(&self.direct),
        }
    }

    /// Checks that the fields needed by `regime` are present and well formed.
    pub fn check(&self, regime: Regime) -> Result<()> {
        match regime {
            Regime::PerfectCsi => {
                self.eve_vec()?;
            }
            Regime::EvOutage | Regime::UserOutage => {
                if self.eve_var()?.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::InvalidScenario("eavesdropper variances must be positive".into()));
                }
                if regime == Regime::UserOutage {
                    self.nominal()?;
                }
            }
        }
        Ok(())
    }
}

/// Draws one `CN(0, 1)` entry: real and imaginary parts each `N(0, 1/2)`.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_vector<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_iterator(n, (0..n).map(|_| complex_normal(rng)))
}

/// Samples the channels of `scenario` from `seed`.
///
/// Every field is drawn regardless of the regime, always in the same order,
/// so one seed yields paired channels across regimes and power budgets.
pub fn sample_channels(scenario: &Scenario, seed: RunSeed) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let (m, nt) = (scenario.m, scenario.nt);
    let direct: Vec<Vec<CVector>> = (0..m)
        .map(|_| (0..m).map(|_| complex_normal_vector(&mut rng, nt)).collect())
        .collect();
    let eve: Vec<CVector> = (0..m).map(|_| complex_normal_vector(&mut rng, nt)).collect();
    ChannelSet {
        nominal: Some(direct.clone()),
        direct,
        eve_vec: Some(eve),
        eve_var: Some(vec![scenario.eve_var; m]),
    }
}

/// Beamformers `w_1, ..., w_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub w: Vec<CVector>,
}

impl BeamformerSet {
    pub fn zeros(m: usize, nt: usize) -> Self {
        Self { w: vec![CVector::zeros(nt); m] }
    }

    pub fn m(&self) -> usize {
        self.w.len()
    }

    pub fn nt(&self) -> usize {
        self.w.first().map_or(0, |v| v.len())
    }

    pub fn norm_sq(&self, i: usize) -> f64 {
        self.w[i].norm_squared()
    }

    pub fn norms_sq(&self) -> Vec<f64> {
        self.w.iter().map(|v| v.norm_squared()).collect()
    }

    /// Stacked real coordinates: per user, `Nt` real parts then `Nt` imaginary parts.
    pub fn to_real(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.m() * self.nt());
        for v in &self.w {
            out.extend(v.iter().map(|z| z.re));
            out.extend(v.iter().map(|z| z.im));
        }
        out
    }

    /// Inverse of [`to_real`](Self::to_real); reads the first `2 M Nt` coordinates.
    pub fn from_real(x: &[f64], m: usize, nt: usize) -> Self {
        let w = (0..m)
            .map(|i| {
                let base = 2 * nt * i;
                CVector::from_iterator(
                    nt,
                    (0..nt).map(|k| Complex64::new(x[base + k], x[base + nt + k])),
                )
            })
            .collect();
        Self { w }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { w: self.w.iter().map(|v| v * Complex64::from(alpha)).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// `||w_i||^2 <= P_i` for every user, up to a relative tolerance.
pub fn power_feasible(w: &BeamformerSet, scenario: &Scenario, rel_tol: f64) -> bool {
    w.w.iter()
        .zip(&scenario.power)
        .all(|(v, &p)| v.norm_squared() <= p * (1.0 + rel_tol))
}

/// Total consumed power `zeta * sum ||w_i||^2 + Pc`.
pub fn total_power(w: &BeamformerSet, scenario: &Scenario) -> f64 {
    scenario.zeta * w.norms_sq().iter().sum::<f64>() + scenario.pc
}

/// Smallest squared beamformer norm and its (0-based) index; ties go to the
/// smallest index.
pub fn min_norm_sq(w: &BeamformerSet) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (i, v) in w.w.iter().enumerate() {
        let n = v.norm_squared();
        if n < best.0 {
            best = (n, i);
        }
    }
    best
}
