//! Seeded random streams.
//!
//! Every chain owns exactly one [`RngStream`]. A stream is addressed by a
//! `(seed, stream)` pair and is backed by ChaCha20 from `rand_chacha`, whose
//! output is specified bit-for-bit and therefore portable across platforms.
//! Different stream ids select disjoint ChaCha keystreams for the same key.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Name and version of the generator behind [`RngStream`].
pub const GENERATOR: &str = "chacha20 (rand_chacha 0.9), key = seed_from_u64(seed), stream = stream id";

/// Number of stream ids reserved per repetition by the experiment drivers.
pub const STREAMS_PER_REPETITION: u64 = 1 << 32;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    /// Stream for `chain` inside repetition `rep`.
    pub fn for_chain(seed: u64, rep: u64, chain: u64) -> Self {
        Self::new(seed, rep * STREAMS_PER_REPETITION + chain)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_stream_repeat() {
        let mut a = RngStream::new(42, 3);
        let mut b = RngStream::new(42, 3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 1);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut r = RngStream::new(7, 0);
        let mut sum = 0.0;
        for _ in 0..100_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        assert!((sum / 100_000.0 - 0.5).abs() < 0.01);
    }

    #[test]
    fn repetition_streams_do_not_collide() {
        let a = RngStream::for_chain(1, 0, 5);
        let b = RngStream::for_chain(1, 1, 5);
        assert_ne!(a.stream(), b.stream());
    }
}
