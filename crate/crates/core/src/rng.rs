//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! seeded from the run seed plus a fixed, documented offset, so the order in
//! which components draw numbers never leaks across components.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Offset added to the run seed for the per-client DP noise streams.
pub const DP_STREAM: u64 = 0x5EED_D1FF;
/// Offset for the secure-aggregation session (pairwise mask seeds).
pub const SECAGG_STREAM: u64 = 0x5EC_A66;
/// Offset for the synthetic generator's per-(view, cluster) streams.
pub const SYNTH_STREAM: u64 = 0x5_7A7E;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// SplitMix64 finaliser; used to combine seeds with stream identifiers.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for `(stream, a, b)` under `seed`.
pub fn derive(seed: u64, stream: u64, a: u64, b: u64) -> u64 {
    mix(mix(mix(seed ^ stream).wrapping_add(a)).wrapping_add(b))
}
