//! Deterministic derivation of child seeds for disjoint random substreams.
//!
//! A run owns one `u64` seed; every consumer of randomness inside the run
//! (perturbation draws, each simulation replica) gets its own child seed via
//! `derive_seed(seed, label)` with a distinct label, so streams never overlap
//! and adding a consumer never shifts the draws of existing ones.

/// Mix `seed` and `label` through two splitmix64 rounds.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let x = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    splitmix64(splitmix64(x))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
