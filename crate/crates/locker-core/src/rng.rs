//! Seeded randomness. Every stochastic stage draws from a [`DetRng`] seeded
//! explicitly, so identical inputs and seeds reproduce identical outputs
//! byte for byte. No ambient entropy anywhere in the crate.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic generator with the small set of draws the pipeline needs.
#[derive(Debug, Clone)]
pub struct DetRng {
    inner: ChaCha8Rng,
}

impl DetRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`; `bound` must be nonzero.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((u128::from(self.next_u64()) * u128::from(bound)) >> 64) as u64
    }

    /// Uniform integer in the inclusive range `[lo, hi]`.
    pub fn int_in(&mut self, lo: u32, hi: u32) -> u32 {
        debug_assert!(lo <= hi);
        lo + self.next_below(u64::from(hi - lo) + 1) as u32
    }

    /// Poisson draw by inversion; adequate for the small rates the
    /// synthetic workloads use.
    pub fn poisson(&mut self, lambda: f64) -> u32 {
        if lambda <= 0.0 {
            return 0;
        }
        let u = self.next_f64();
        let mut p = (-lambda).exp();
        let mut cdf = p;
        let mut k: u32 = 0;
        while u > cdf && k < 10_000 {
            k += 1;
            p *= lambda / f64::from(k);
            cdf += p;
        }
        k
    }

    /// Index drawn from a discrete distribution proportional to `weights`.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        debug_assert!(total > 0.0);
        let target = self.next_f64() * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if target < acc {
                return i;
            }
        }
        weights.len() - 1
    }

    /// `n` indices drawn uniformly with replacement from `0..pool`.
    pub fn bootstrap_indices(&mut self, pool: usize, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.next_below(pool as u64) as usize).collect()
    }

    /// `k` distinct values sampled from `0..n` by partial Fisher-Yates,
    /// returned in draw order.
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.next_below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// Stable 64-bit FNV-1a, used to derive stage seeds from string labels.
pub fn hash_label(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed for a named sub-stage derived from a parent seed.
pub fn derive_seed(parent: u64, label: &str) -> u64 {
    parent ^ hash_label(label).rotate_left(17)
}

/// Seed for the `i`-th member of a seeded family (trees in a forest,
/// folds of a cross-validation split).
pub fn derive_indexed_seed(parent: u64, index: u64) -> u64 {
    parent
        .wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .rotate_left(31)
        .wrapping_mul(0xbf58_476d_1ce4_e5b9)
}
