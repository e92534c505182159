//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, stream, time, cell)`, so results
//! never depend on iteration order or on how work is split across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A keyed counter-based generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0x5DEE_CE66_D1CE_4E5B),
        }
    }

    /// Derives an independent key, e.g. one per replicate.
    pub fn fork(&self, stream: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN))),
        }
    }

    /// The 64-bit draw at counter `(time, cell)`.
    #[inline]
    pub fn draw(&self, time: u64, cell: u64) -> u64 {
        let a = mix64(self.key.wrapping_add(time.wrapping_mul(GOLDEN)));
        mix64(a ^ cell.wrapping_add(1).wrapping_mul(0xD6E8_FEB8_6659_FD93))
    }

    /// Uniform in `[0, 1)` with 53 bits.
    #[inline]
    pub fn uniform(&self, time: u64, cell: u64) -> f64 {
        (self.draw(time, cell) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// A seeded sequential generator for code paths that need many draws at one
/// logical counter (Dirichlet sampling, random initial states).
#[derive(Debug, Clone)]
pub struct SeqRng {
    inner: ChaCha8Rng,
}

impl SeqRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.random()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.inner.random_range(0..n)
    }

    /// Standard exponential variate.
    pub fn exponential(&mut self) -> f64 {
        Exp1.sample(&mut self.inner)
    }

    /// A point drawn uniformly from the simplex of dimension `len`
    /// (flat Dirichlet).
    pub fn simplex(&mut self, len: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..len).map(|_| self.exponential() + 1e-300).collect();
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_pure() {
        let r = CounterRng::new(7);
        assert_eq!(r.draw(3, 9), CounterRng::new(7).draw(3, 9));
        assert_ne!(r.draw(3, 9), r.draw(9, 3));
        assert_ne!(r.fork(0).draw(0, 0), r.fork(1).draw(0, 0));
    }

    #[test]
    fn uniform_mean_is_half() {
        let r = CounterRng::new(1);
        let n = 200_000;
        let m: f64 = (0..n).map(|i| r.uniform(0, i)).sum::<f64>() / n as f64;
        // 3σ for U(0,1) is 3·sqrt(1/12/n)
        assert!((m - 0.5).abs() < 3.0 * (1.0 / 12.0 / n as f64).sqrt());
    }

    #[test]
    fn simplex_sums_to_one() {
        let mut s = SeqRng::new(3);
        for len in 1..10 {
            let v = s.simplex(len);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(v.iter().all(|&x| x > 0.0));
        }
    }
}
