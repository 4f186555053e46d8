//! Seeded pseudo-random source.
//!
//! All randomness in the crate comes from the standard `pcg64` generator
//! (128-bit LCG, XSL-RR output) constructed as `pcg64(state = seed, stream =
//! PCG default stream)`. Derived quantities are computed from raw 64-bit
//! outputs with fixed formulas so that another implementation of pcg64 can
//! reproduce every generated instance:
//!
//! * `uniform()` = `(next_u64() >> 11) * 2^-53`, in `[0, 1)`;
//! * `below(n)` = `next_u64() % n`.

use rand_core::Rng;
use rand_pcg::Pcg64;

/// Default stream selector of the PCG reference implementation.
pub const PCG_DEFAULT_STREAM: u128 = 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96;

#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: Pcg64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            inner: Pcg64::new(u128::from(seed), PCG_DEFAULT_STREAM),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[low, high)`; returns `low` when the interval is empty.
    pub fn uniform_in(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        self.next_u64() % n
    }
}
