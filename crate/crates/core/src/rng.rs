// SPDX-License-Identifier: Apache-2.0

//! Seeded random streams.
//!
//! Every stochastic stage draws from a ChaCha8 generator derived from the
//! user seed plus a stage-specific stream id, so stages never share state and
//! results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

pub(crate) const STREAM_NOISE: u64 = 1;
pub(crate) const STREAM_REALIZE: u64 = 2;
pub(crate) const STREAM_TRAIN: u64 = 4;
pub(crate) const STREAM_GMM: u64 = 5;
pub(crate) const STREAM_BASELINE: u64 = 6;
pub(crate) const STREAM_NEGATIVES: u64 = 7;
pub(crate) const STREAM_ENHANCE: u64 = 8;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> StageRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator keyed by `(seed, a, b)`, used for per-walk streams.
pub fn keyed(seed: u64, a: u64, b: u64) -> StageRng {
    ChaCha8Rng::seed_from_u64(mix64(mix64(seed ^ mix64(a)) ^ b))
}
