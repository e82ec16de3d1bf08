//! Seeded random streams.
//!
//! Every random decision in a run derives from the run seed plus a stream
//! label, using ChaCha's 64-bit stream selector. Two streams with different
//! labels never overlap, and the same `(seed, label)` pair always yields the
//! same sequence regardless of call order elsewhere in the program.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Well-known stream labels.
pub mod streams {
    pub const INITIAL_DESIGN: u64 = 1;
    pub const FIT: u64 = 2;
    pub const ACQUISITION: u64 = 3;
    pub const EMPIRICAL_BAYES: u64 = 4;
    pub const BENCHMARK: u64 = 5;
}

/// SplitMix64 finaliser, used to derive child seeds.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream `label` of the root `seed`.
pub fn stream(seed: u64, label: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label);
    rng
}

/// Random stream `label` of the child seed `mix(seed ^ mix(index))`, for
/// per-iteration or per-repetition randomness.
pub fn substream(seed: u64, label: u64, index: u64) -> ChaCha8Rng {
    stream(mix(seed ^ mix(index)), label)
}
