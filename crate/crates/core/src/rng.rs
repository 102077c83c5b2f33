//! Random streams.
//!
//! Sampling code draws through [`UnitSource`] rather than a concrete
//! generator, which lets tests pin draws to their bounds. Every seeded
//! generator in the crate is a ChaCha8 stream derived from a master seed and
//! a stream index.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_POW_NEG_53: f64 = 1.0 / 9_007_199_254_740_992.0;
const TWO_POW_NEG_52: f64 = 2.0 * TWO_POW_NEG_53;

/// A source of uniform draws.
pub trait UnitSource {
    /// Uniform draw in `[0, 1)`. Pinned test sources may return exactly `1.0`.
    fn unit(&mut self) -> f64;

    /// Uniform draw in the open interval `(0, 1)`.
    fn unit_open(&mut self) -> f64 {
        let u = self.unit();
        if u <= 0.0 {
            TWO_POW_NEG_53
        } else if u >= 1.0 {
            1.0 - TWO_POW_NEG_53
        } else {
            u
        }
    }

    /// Uniform draw in `[lo, hi]`.
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.unit() * (hi - lo)
    }

    /// Uniform index in `0..n`. `n` must be nonzero.
    fn index(&mut self, n: usize) -> usize {
        let i = (self.unit() * n as f64) as usize;
        i.min(n - 1)
    }
}

impl<R: RngCore + ?Sized> UnitSource for R {
    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    // Odd multiples of 2^-53: exactly representable, and so is 1 - u.
    fn unit_open(&mut self) -> f64 {
        ((self.next_u64() >> 12) as f64 + 0.5) * TWO_POW_NEG_52
    }
}

/// The generator type used throughout.
pub type StreamRng = ChaCha8Rng;

/// Independent stream `index` of `master_seed`.
pub fn stream_rng(master_seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Fisher-Yates shuffle driven by a [`UnitSource`].
pub fn shuffle<T, R: UnitSource + ?Sized>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.index(i + 1);
        items.swap(i, j);
    }
}

/// Test double returning a fixed value on every draw.
#[derive(Debug, Clone, Copy)]
pub struct PinnedSource(pub f64);

impl UnitSource for PinnedSource {
    fn unit(&mut self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let mut a = stream_rng(7, 0);
        let mut b = stream_rng(7, 1);
        let mut a2 = stream_rng(7, 0);
        let xa: [u64; 4] = core::array::from_fn(|_| a.next_u64());
        let xb: [u64; 4] = core::array::from_fn(|_| b.next_u64());
        let xa2: [u64; 4] = core::array::from_fn(|_| a2.next_u64());
        assert_eq!(xa, xa2);
        assert_ne!(xa, xb);
    }

    #[test]
    fn unit_draws_stay_in_range() {
        let mut r = stream_rng(1, 0);
        for _ in 0..10_000 {
            let u = r.unit();
            assert!((0.0..1.0).contains(&u));
            let v = r.unit_open();
            assert!(v > 0.0 && v < 1.0);
            assert!(r.index(3) < 3);
        }
    }

    #[test]
    fn pinned_source_open_interval_is_clamped() {
        assert!(PinnedSource(0.0).unit_open() > 0.0);
        assert!(PinnedSource(1.0).unit_open() < 1.0);
        assert_eq!(PinnedSource(1.0).uniform(400.0, 2000.0), 2000.0);
    }
}
