//! Splittable, counter-addressed random streams.
//!
//! Every draw is addressed by `(seed, domain, index)`: the seed keys a ChaCha8
//! generator, the domain selects the ChaCha stream and the index selects a
//! fixed-size block of words within it. Subject `i` of a dataset always reads
//! the same block regardless of generation order or thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Covariates and latent event times.
pub const DOMAIN_SUBJECTS: u64 = 1;
/// Log-censoring offsets.
pub const DOMAIN_CENSORING: u64 = 2;
/// Covariate draws used by the λ₂ root solve.
pub const DOMAIN_LAMBDA2: u64 = 3;
/// Bootstrap resample indices.
pub const DOMAIN_BOOTSTRAP: u64 = 4;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for replicate / task `index` of a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// A generator positioned at block `index` of `(seed, domain)`, where each
/// block spans `words_per_block` 32-bit words.
pub fn substream(seed: u64, domain: u64, index: u64, words_per_block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(domain);
    rng.set_word_pos(index as u128 * words_per_block as u128);
    rng
}

/// Uniform on the open interval (0, 1); consumes one `u64`.
#[inline]
pub fn open_unit<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Two independent standard normals via Box–Muller; consumes two `u64`s.
#[inline]
pub fn normal_pair<R: RngCore>(rng: &mut R) -> (f64, f64) {
    let u1 = open_unit(rng);
    let u2 = open_unit(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Fills `out` with standard normals; consumes `2 * ceil(out.len() / 2)` `u64`s.
pub fn fill_normals<R: RngCore>(rng: &mut R, out: &mut [f64]) {
    for chunk in out.chunks_mut(2) {
        let (a, b) = normal_pair(rng);
        chunk[0] = a;
        if chunk.len() > 1 {
            chunk[1] = b;
        }
    }
}
