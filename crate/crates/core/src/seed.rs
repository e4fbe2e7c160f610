//! Splittable seed derivation.
//!
//! Child seeds are a SplitMix64 chain over `(parent, key...)`, so every trial
//! and every element gets its own stream no matter which worker draws it.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and an ordered list of keys.
pub fn derive(parent: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix(parent.wrapping_add(GOLDEN)), |acc, &k| {
        mix(acc ^ mix(k.wrapping_add(GOLDEN).wrapping_mul(GOLDEN)))
    })
}
