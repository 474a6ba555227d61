//! Seeded, splittable random streams.
//!
//! Every experiment derives all of its randomness from one master seed.
//! Sub-streams are keyed by integer tag paths (grid index, realization
//! index, iteration, particle, ...) so parallel and serial executions draw
//! identical values and any run can be replayed from its seed lineage.

use rand::SeedableRng;

pub use rand_chacha::ChaCha8Rng;

/// Derive a child seed from a master seed and a tag path.
///
/// Tag paths that differ in any element or in length produce unrelated
/// seeds; the same path always produces the same seed.
pub fn stream_seed(master: u64, tags: &[u64]) -> u64 {
    let mut x = master ^ 0x9E37_79B9_7F4A_7C15;
    for &tag in tags {
        x = mix64(x ^ tag.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    }
    mix64(x)
}

/// RNG for the sub-stream identified by `tags` under `master`.
pub fn stream_rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, tags))
}

// splitmix64 finalizer
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
