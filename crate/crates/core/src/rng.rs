//! Counter-based seeding.
//!
//! Replicate seeds and per-mode Gaussian coefficients are pure functions of
//! integer keys, so any evaluation order (or thread schedule) sees the same
//! random numbers.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function applied to `x + gamma`.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Replicate seed `mix(base, radius_index, replicate)`:
/// `splitmix64(splitmix64(splitmix64(base) ^ radius_index) ^ replicate)`.
pub fn mix_seed(base: u64, radius_index: u64, replicate: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ radius_index) ^ replicate)
}

/// Zigzag encoding of a signed integer.
#[inline]
fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

/// Hashes an integer vector under a seed.
#[inline]
pub fn key_hash(seed: u64, key: &[i64]) -> u64 {
    let mut h = splitmix64(seed);
    for &k in key {
        h = splitmix64(h ^ zigzag(k));
    }
    h
}

#[inline]
fn unit_open(bits: u64) -> f64 {
    // 53 random bits mapped into (0, 1)
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Two independent standard normals determined by `(seed, key)` (Box-Muller).
#[inline]
pub fn keyed_normal_pair(seed: u64, key: &[i64]) -> (f64, f64) {
    let h = key_hash(seed, key);
    let u1 = unit_open(h);
    let u2 = unit_open(splitmix64(h));
    let radius = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (radius * c, radius * s)
}
