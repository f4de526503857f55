//! Path-following beamforming for secrecy throughput and secure energy
//! efficiency in multi-pair MISO networks overheard by a single-antenna
//! eavesdropper.
//!
//! Three channel-knowledge regimes are covered: perfect CSI, eavesdropper
//! channel known only in distribution, and additionally Gaussian errors on
//! the user channels. Every algorithm solves a sequence of convex inner
//! approximations (see [`surrogates`]) with the log-barrier solver in
//! [`solver`], re-tightening outage rates with the bisection rules of
//! [`rootfind`] after each step.

pub mod algorithms;
pub mod error;
pub mod model;
pub mod outage;
pub mod rates;
pub mod rootfind;
pub mod solver;
pub mod surrogates;

pub use algorithms::{AlgorithmConfig, ConvergenceReport, IterateState, RunStatus};
pub use error::{Error, Result};
pub use model::{BeamformerSet, ChannelSet, CVector, Regime, RunSeed, Scenario};
pub use rates::{RateVector, ThresholdConstants};
pub use solver::{SolveOutcome, SolveStatus, SolverConfig, SubproblemModel};

/// Natural-log rates are converted to bits by dividing by ln 2.
pub fn nats_to_bits(x: f64) -> f64 {
    x / std::f64::consts::LN_2
}

/// Converts a secure energy efficiency in nats per mW to bits/J/Hz.
pub fn see_to_bits_per_joule(theta: f64) -> f64 {
    nats_to_bits(theta) * 1e3
}
