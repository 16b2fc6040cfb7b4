//! Bandit-adapted exploration for value-based reinforcement learning.
//!
//! A single learned value function (a table of return quantiles) is turned
//! into a family of behaviour policies by a *modulation*
//! `z = (temperature, epsilon, biases, repeat probability, optimism)`.
//! A non-stationary multi-armed bandit with an adaptive window reallocates
//! probability across modulations based on a per-episode fitness signal.
//! The bandit can also be factored into one sub-bandit per modulation
//! dimension.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, threaded
//! actors and the command-line driver live in the companion `modbandit`
//! crate.
//!
//! ## Modules
//!
//! - [`modulation`]: modulation vectors, arm sets and flat enumeration.
//! - [`policy`]: the modulated action distribution and greedy evaluation.
//! - [`bandit`]: the adaptive-horizon bandit, its factored composition and
//!   stationary baselines.
//! - [`env`]: tabular MDPs, LavaWorld, exact success/value solves and the
//!   lava-suppression learning rule.
//! - [`learner`]: tabular quantile-regression Q-learning with prioritized
//!   replay.
//! - [`harness`]: single-threaded experiment orchestration.
//! - [`metrics`]: relative rank, performance drop and cumulative success.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod linalg;
mod math;

pub mod bandit;
pub mod env;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod modulation;
pub mod policy;

pub use error::{Error, Result};
pub use modulation::{Dimension, Modulation};
pub use policy::ActionDistribution;

/// Deterministic random source used throughout the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Build the crate's seeded random source.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}

/// Derive an independent stream seed from a master seed and a stream id.
///
/// SplitMix64 finaliser over `master ^ stream`; stable across platforms.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
