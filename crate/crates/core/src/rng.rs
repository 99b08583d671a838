//! Seeded 64-bit generator used for potential generation and Monte Carlo
//! sampling. The algorithm is fixed here so results can be reproduced in any
//! language:
//!
//! State update and output (SplitMix64):
//!
//! ```text
//! state <- state + 0x9E3779B97F4A7C15            (mod 2^64)
//! z <- state
//! z <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9    (mod 2^64)
//! z <- (z XOR (z >> 27)) * 0x94D049BB133111EB    (mod 2^64)
//! output = z XOR (z >> 31)
//! ```
//!
//! `next_f64` maps the top 53 bits of the output to `[0, 1)`:
//! `(output >> 11) * 2^-53`.
//!
//! Independent substreams are derived by counter, not by sharing a stream:
//! substream `k` of master seed `s` starts from state
//! `mix(s XOR ((k + 1) * 0x9E3779B97F4A7C15))`, where `mix` is the output
//! transformation above applied once. Deterministic per `(s, k)` regardless
//! of evaluation order.

const GOLDEN: u64 = 0x9E3779B97F4A7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Counter-derived substream; see the module docs for the exact formula.
    pub fn substream(seed: u64, counter: u64) -> Self {
        Self {
            state: mix(seed ^ counter.wrapping_add(1).wrapping_mul(GOLDEN)),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn next_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform in `[-1, 1)`.
    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }
}
