//! Seed derivation for independent, reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the splitmix64 generator applied to `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for repeat `i` of an experiment started from `base`.
pub fn repeat_seed(base: u64, i: u64) -> u64 {
    base ^ splitmix64(i)
}

/// Named sub-streams of a single run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    InitialDesign = 1,
    Weights = 2,
    Durations = 3,
    Fit = 4,
    Inner = 5,
}

/// Derives the seed of the `index`-th draw of `stream` within a run.
pub fn derive(seed: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stream as u64)).wrapping_add(index))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
