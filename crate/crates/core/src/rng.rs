//! Seed derivation and ordered parallel replication.
//!
//! Every sampler takes a plain `u64` seed and builds a ChaCha8 stream from it.
//! Replicate `i` of an experiment seeded with `s` uses `mix(s, i)`, so results do
//! not depend on how replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of replicate `index` from a parent seed.
pub fn mix(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// An independent auxiliary stream attached to `seed` (used for randomised
/// refinements that must not perturb the main stream).
pub fn aux_rng(seed: u64, lane: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(lane + 1);
    rng
}

/// Runs `f(i, mix(seed, i))` for `i in 0..n` and returns results in index order.
#[cfg(feature = "parallel")]
pub fn replicate<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(|i| f(i, mix(seed, i as u64))).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn replicate<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    F: Fn(usize, u64) -> T,
{
    (0..n).map(|i| f(i, mix(seed, i as u64))).collect()
}
