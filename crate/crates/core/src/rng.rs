//! Self-contained deterministic random number generator.
//!
//! Byte-identical regeneration of synthetic blocks and model initializations
//! is a hard requirement, so the generator is pinned here instead of pulling
//! in an external crate whose stream could change across versions. The core
//! is xoshiro256++ seeded through splitmix64.

/// Deterministic PRNG (xoshiro256++).
#[derive(Debug, Clone)]
pub struct Rng {
    state: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut s = seed;
        let state = [
            splitmix64(&mut s),
            splitmix64(&mut s),
            splitmix64(&mut s),
            splitmix64(&mut s),
        ];
        Rng { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n). n must be > 0.
    pub fn range_u32(&mut self, n: u32) -> u32 {
        debug_assert!(n > 0);
        // Multiply-shift; bias is negligible for the small ranges used here
        // and the mapping is stable across platforms.
        ((self.next_u64() >> 32).wrapping_mul(n as u64) >> 32) as u32
    }

    /// Bernoulli draw with probability `p` of returning true.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Poisson-distributed count with the given mean.
    ///
    /// Knuth's product method, with recursive halving so the running
    /// product never underflows for large means.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        debug_assert!(mean >= 0.0);
        if mean <= 0.0 {
            return 0;
        }
        if mean > 30.0 {
            // Sum of independent Poissons is Poisson with summed mean.
            let half = mean / 2.0;
            return self.poisson(half) + self.poisson(mean - half);
        }
        let limit = (-mean).exp();
        let mut product = self.next_f64();
        let mut count = 0u64;
        while product > limit {
            count += 1;
            product *= self.next_f64();
        }
        count
    }
}

/// Derive a sub-seed from a base seed, a component label, and an index.
///
/// FNV-1a over the label and index, mixed with the base. Used so that all
/// randomness in a pipeline flows from a single seed while sub-components
/// stay decorrelated.
pub fn derive_seed(base: u64, label: &str, index: u64) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    for byte in index.to_le_bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut s = base ^ hash;
    splitmix64(&mut s)
}
