//! Per-job seed derivation.
//!
//! Seeds are mixed with SplitMix64 so that a job's stream depends only on
//! `(seed, indices)`: adding grid points or trials never perturbs the streams
//! of existing jobs.

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(splitmix64(seed), |acc, &i| splitmix64(acc ^ splitmix64(i)))
}
