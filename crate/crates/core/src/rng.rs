//! Deterministic sample generator.
//!
//! All runs draw from ChaCha8 (`rand_chacha` 0.3) seeded through
//! `SeedableRng::seed_from_u64`. Sample indices are reduced from 64-bit words
//! with the multiply-high map `(w * m) >> 64`, which needs no rejection loop and
//! does not depend on `rand`'s range-sampling internals.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::SampleIndex;

pub const GENERATOR_NAME: &str = "chacha8-v1";

#[derive(Clone, Debug)]
pub struct SampleRng {
    inner: ChaCha8Rng,
}

impl SampleRng {
    pub fn new(seed: u64) -> Self {
        SampleRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent generator for stream `stream` of the same seed.
    pub fn split(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SampleRng { inner }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform index in `0..m`.
    #[inline]
    pub fn sample_index(&mut self, m: usize) -> SampleIndex {
        debug_assert!(m >= 1);
        let w = self.inner.next_u64() as u128;
        SampleIndex(((w * m as u128) >> 64) as usize)
    }

    pub fn inner_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}
