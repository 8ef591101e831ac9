//! Reproducible random streams.
//!
//! A stream is ChaCha20 keyed by the base seed (little-endian `u64` in key bytes 0..8,
//! remaining key bytes zero) with the 64-bit stream id set to the run index. Draws:
//!
//! - uniform: `(next_u64 >> 11) * 2^-53`, in `[0, 1)`;
//! - standard normal: Box-Muller from two uniforms `u1, u2`,
//!   `sqrt(-2 ln(1 - u1)) * cos(2π u2)` (the sine branch is discarded);
//! - category in `0..k`: `floor(u * k)`.
//!
//! Any ChaCha20 implementation with a 64-bit stream counter reproduces these bit-exactly.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Clone, Debug)]
pub struct Stream {
    inner: ChaCha20Rng,
}

impl Stream {
    pub fn new(base_seed: u64, run_index: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&base_seed.to_le_bytes());
        let mut inner = ChaCha20Rng::from_seed(key);
        inner.set_stream(run_index);
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn category(&mut self, k: usize) -> usize {
        ((self.uniform() * k as f64) as usize).min(k - 1)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}
