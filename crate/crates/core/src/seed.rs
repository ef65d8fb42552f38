//! Deterministic sub-seed derivation so independent random streams
//! (weight init, shuffling, per-utterance rendering) can be rebuilt from
//! one base seed regardless of execution order.

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `base`, one mixing round per part.
pub(crate) fn derive(base: u64, parts: &[u64]) -> u64 {
    let mut acc = mix64(base);
    for &p in parts {
        acc = mix64(acc ^ p.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    }
    acc
}
