//! Deterministic per-trial random streams.
//!
//! Every trial draws from its own ChaCha8 stream keyed by
//! `(master seed, trial index, stream)`, so results do not depend on how
//! trials are scheduled across threads. Normal variates come from
//! `rand_distr::StandardNormal` (ziggurat method).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent purposes within a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Screen = 1,
    Noise = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one trial's stream.
pub fn derive_seed(master: u64, trial: u64, stream: Stream) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(trial)) ^ (stream as u64))
}

pub fn trial_rng(master: u64, trial: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, trial, stream))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
