//! Fixed, language-portable PRNG so generated instances are reproducible
//! from (spec, seed) alone, in any implementation.
//!
//! Seeding: one SplitMix64 step on the seed —
//! `z = seed + 0x9E3779B97F4A7C15;
//!  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//!  z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
//!  state = z ^ (z >> 31)` (state 1 if that is zero).
//!
//! Stream: xorshift64* —
//! `x ^= x >> 12; x ^= x << 25; x ^= x >> 27; output = x * 0x2545F4914F6CDD1D`.
//!
//! Bounded draws use rejection sampling, so there is no modulo bias and the
//! stream consumption is identical across platforms.

#[derive(Clone, Debug)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(0x9E3779B97F4A7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^= z >> 31;
        Self {
            state: if z == 0 { 1 } else { z },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545F4914F6CDD1D)
    }

    /// Uniform in [0, n), n ≥ 1, by rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Uniform in [lo, hi] inclusive.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below(hi - lo + 1)
    }

    pub fn coin(&mut self) -> bool {
        self.below(2) == 1
    }

    /// First `k` entries of a uniform random permutation of 0..n, by partial
    /// Fisher–Yates over a sparse index map.
    pub fn sample_without_replacement(&mut self, n: u64, k: u64) -> Vec<u64> {
        assert!(k <= n);
        let mut swapped = std::collections::BTreeMap::new();
        let mut out = Vec::with_capacity(k as usize);
        for step in 0..k {
            let pick = self.range(step, n - 1);
            let value = *swapped.get(&pick).unwrap_or(&pick);
            let displaced = *swapped.get(&step).unwrap_or(&step);
            swapped.insert(pick, displaced);
            out.push(value);
        }
        out
    }
}
