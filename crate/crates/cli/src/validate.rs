//! Monte-Carlo check of the outage constraints at a computed solution.

use secbeam_core::outage::{mc_eve_outage, mc_user_outage, McEstimate};
use secbeam_core::{ChannelSet, IterateState, Regime, Scenario};

/// Allowed deviation of an estimate, in standard errors.
pub const SIGMA_BAND: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub eve: Vec<McEstimate>,
    /// Empty unless the user channels are uncertain.
    pub user: Vec<McEstimate>,
    pub passed: bool,
}

/// Eavesdropper outage must sit at its level (the outage SINR is a quantile,
/// so it is tight by construction); user outage must not exceed its level.
/// `None` under perfect channel knowledge, where there is nothing to check.
pub fn validate_solution(sc: &Scenario, ch: &ChannelSet, st: &IterateState, n_samples: usize, seed: u64) -> Option<Validation> {
    if sc.regime == Regime::PerfectCsi {
        return None;
    }
    let r = st.r.as_ref()?;
    let eve_var = ch.eve_var().ok()?;
    let eve: Vec<McEstimate> = (0..sc.m)
        .map(|i| mc_eve_outage(&st.w, eve_var, sc.sigma_e, i, r[i], n_samples, seed.wrapping_mul(31).wrapping_add(i as u64)))
        .collect();
    let mut passed = eve.iter().all(|e| e.within(sc.eps_ev, SIGMA_BAND));
    let mut user = Vec::new();
    if sc.regime == Regime::UserOutage {
        let big_r = st.big_r.as_ref()?;
        let nominal = ch.nominal().ok()?;
        user = (0..sc.m)
            .map(|i| {
                let s = seed.wrapping_mul(37).wrapping_add(1000 + i as u64);
                mc_user_outage(&st.w, nominal, sc.sigma_u[i], sc.delta, i, big_r[i], n_samples, s)
            })
            .collect();
        passed &= user.iter().all(|u| u.estimate <= sc.eps_user + SIGMA_BAND * u.std_error);
    }
    Some(Validation { eve, user, passed })
}
