//! Deterministic seed derivation for independent RNG streams.

/// Derives a child seed from a base seed and a stream index using the
/// splitmix64 finalizer. Children of distinct indices are statistically
/// independent, and the mapping is stable across platforms.
pub(crate) fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
