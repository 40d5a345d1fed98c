//! Seeded random streams.
//!
//! Every random quantity is drawn from its own ChaCha8 stream whose 256-bit
//! key is `SHA-256(seed as little-endian u64 || purpose tag)`. Streams for
//! different purposes are therefore independent of each other and of the
//! order in which they are consumed, so a single quantity (say the NLoS
//! vector) can be regenerated without replaying the others.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

pub const TAG_H_TILDE: &str = "channel/h_tilde";
pub const TAG_NLOS: &str = "channel/nlos_rg";

pub fn stream(seed: u64, tag: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(tag.as_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(key)
}

/// Circularly symmetric complex Gaussian with unit variance: real and
/// imaginary parts i.i.d. `N(0, 1/2)`.
pub fn cscg<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
