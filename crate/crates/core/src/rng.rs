//! Seed derivation. Every random stream is keyed by (seed, round, task) so
//! results do not depend on which thread runs which worker.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// seed XOR hash(round, task)
pub fn round_seed(seed: u64, round: u64, task: u64) -> u64 {
    seed ^ splitmix64(splitmix64(round) ^ task.rotate_left(32))
}

pub fn round_rng(seed: u64, round: u64, task: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(round_seed(seed, round, task))
}

/// Independent stream for a named purpose (data generation, splitting).
pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(purpose.wrapping_add(0xA5A5))))
}
