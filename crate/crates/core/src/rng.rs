//! Seeded, counter-based random streams.
//!
//! Every random quantity in the library is drawn from a [`Stream`] identified
//! by `(seed, domain, index)`. The underlying generator is ChaCha with 8
//! rounds (`rand_chacha::ChaCha8Rng`):
//!
//! * key: the 32-byte seed produced by `SeedableRng::seed_from_u64(seed)`
//!   (rand_core's PCG32 expansion of the 64-bit seed);
//! * stream: `(domain << 56) | index`, set through `ChaCha8Rng::set_stream`;
//! * word position: starts at 0 for every stream.
//!
//! Because each stream is addressed by its index rather than by the position
//! of a shared generator, redrawing item `i` never depends on how many words
//! items `0..i` consumed.
//!
//! Integers in `{lo, ..., hi}` are drawn by rejection from raw 64-bit words
//! (no modulo bias); reals in `[0, 1)` take the top 53 bits of one word.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Namespaces that keep unrelated consumers on disjoint streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    /// Generating-vector draws of the multiple-lattice construction.
    PlanDraw = 0,
    /// Random shifts.
    Shift = 1,
    /// Random polynomial coefficients.
    Polynomial = 2,
    /// Lower-bound sweeps.
    Sweep = 3,
    /// Single reconstructing lattice search.
    SingleLattice = 4,
}

const INDEX_BITS: u32 = 56;

/// One independent substream.
pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, domain: Domain, index: u64) -> Self {
        debug_assert!(index < (1 << INDEX_BITS));
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(((domain as u64) << INDEX_BITS) | (index & ((1 << INDEX_BITS) - 1)));
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `lo..=hi` by rejection sampling.
    pub fn uniform_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        let span = hi - lo;
        if span == u64::MAX {
            return self.next_u64();
        }
        let range = span + 1;
        // Largest multiple of `range` that fits in 2^64, minus one.
        let zone = u64::MAX - (u64::MAX - range + 1) % range;
        loop {
            let w = self.next_u64();
            if w <= zone {
                return lo + w % range;
            }
        }
    }

    /// Uniform real in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate.
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// A point uniformly distributed in `[0,1)^d`.
pub fn uniform_point(seed: u64, domain: Domain, index: u64, dim: usize) -> Vec<f64> {
    let mut s = Stream::new(seed, domain, index);
    (0..dim).map(|_| s.unit()).collect()
}
