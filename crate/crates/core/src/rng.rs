//! Seeded random source.
//!
//! Every random choice in the crate goes through [`SdrRng`], a ChaCha8
//! stream cipher generator. ChaCha output is specified bit-for-bit, so a
//! given seed yields the same draws on every platform. Independent
//! substreams (one per Monte Carlo trial, for instance) are obtained with
//! [`SdrRng::substream`], which keeps the seed and selects a different
//! ChaCha stream id.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SdrRng {
    inner: ChaCha8Rng,
}

impl SdrRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream `id` of `seed`. Substreams of one seed never overlap.
    pub fn substream(seed: u64, id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(id);
        Self { inner }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform draw in `[0, n)`. `n` must be nonzero.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.gen()
    }

    pub(crate) fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }

    pub(crate) fn set_word_pos(&mut self, pos: u128) {
        self.inner.set_word_pos(pos);
    }
}
