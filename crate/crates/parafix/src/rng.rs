//! Seeded sampling helpers shared by the generators, the property checker
//! and the diagnostics module. Everything here is a pure function of its
//! seed so repeated calls are byte-identical.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::VecN;

/// SplitMix64 finalizer; decorrelates nearby seeds.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent stream seed from a base seed and a stream index
/// (an iteration number, an agent id, a trial counter, ...).
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draw via Box-Muller. Two uniforms per call keeps the
/// stream position independent of any cached second value.
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub(crate) fn gaussian_vec<R: Rng>(rng: &mut R, n: usize) -> VecN {
    VecN::from_raw((0..n).map(|_| standard_normal(rng)).collect())
}
