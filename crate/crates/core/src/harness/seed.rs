//! Deterministic per-run seed derivation.
//!
//! `derive_seed(base, stream, key) = mix(mix(mix(base) ^ stream) ^ key)` with
//! `mix` the SplitMix64 finalizer. Seeds depend only on the base seed, the
//! stream constant, and a key that identifies the run's role (e.g. the bit
//! pattern of its corruption probability), never on list positions, so
//! adding a method or a probability leaves every other run unchanged.

/// Stream for synthetic data generation.
pub const STREAM_DATA: u64 = 0x6461_7461_0000_0001;
/// Stream for the corruption channel.
pub const STREAM_CHANNEL: u64 = 0x6368_616e_0000_0002;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, stream: u64, key: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ stream) ^ key)
}
