//! Shared fixtures for the benchmarks.

use secbeam_core::model::sample_channels;
use secbeam_core::{ChannelSet, Regime, RunSeed, Scenario};

/// Default-parameter scenario with `m` pairs at 20 mW and its channels for `seed`.
pub fn instance(m: usize, regime: Regime, seed: u64) -> (Scenario, ChannelSet) {
    let sc = Scenario::simulation_defaults(m, regime, 20.0);
    let ch = sample_channels(&sc, RunSeed(seed));
    (sc, ch)
}
