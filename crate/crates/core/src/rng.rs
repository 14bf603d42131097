//! Deterministic seeding.
//!
//! Every random stream is a ChaCha8 generator (2^64 blocks per stream, 2^64
//! streams per key) keyed by a 64-bit seed derived from the master seed with
//! a SplitMix64 mixing function. Streams never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Recorded in output metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3), seed_from_u64 + set_stream; seeds mixed with SplitMix64";

pub const DISORDER_STREAM: u64 = 0;
pub const DYNAMICS_STREAM: u64 = 1;
pub const TORIC_STREAM: u64 = 2;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a seed with two indices into a new, well-separated seed.
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let h = splitmix64(seed ^ 0x5851_F42D_4C95_7F2D);
    let h = splitmix64(h ^ a.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(h ^ b.wrapping_mul(0xA076_1D64_78BD_642F))
}

pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
