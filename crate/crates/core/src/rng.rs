//! Seed derivation for reproducible, order-independent Monte-Carlo runs.
//!
//! Every random draw in a trial comes from a generator seeded by
//! `(master_seed, trial_index, stream)`, so results do not depend on which
//! thread runs which trial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams used inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Fading = 1,
    Noise = 2,
    Schedule = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master_seed: u64, trial_index: u64, stream: Stream) -> u64 {
    let a = splitmix64(master_seed);
    let b = splitmix64(a ^ trial_index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(b ^ (stream as u64).wrapping_mul(0xABC9_8388_FB8F_AC03))
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
