//! Seeded random streams.
//!
//! Every random decision in the toolkit draws from a [`RandomStream`], a
//! SplitMix64 counter generator. Streams are never shared: each unit of work
//! derives its own stream from a master seed and a path of integers
//! (`run`, `document`, `sentence`, ...), so results do not depend on the order
//! in which units are processed or on how many threads process them.
//!
//! The construction is fixed so that other implementations can reproduce it
//! bit for bit:
//!
//! * `mix(z)`: `z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9`,
//!   `z = (z ^ (z >> 27)) * 0x94D049BB133111EB`, `z ^ (z >> 31)`
//!   (wrapping arithmetic).
//! * `next_u64`: `state += 0x9E3779B97F4A7C15; mix(state)`.
//! * `derive(seed, path)`: `h = mix(seed ^ 0x6A09E667F3BCC909)`, then for each
//!   `p` in `path`: `h = mix(h ^ mix(p + 0x9E3779B97F4A7C15))`. The stream
//!   state is `h`.
//! * `below(n)`: draw `x` until `x < (2^64 / n) * n` (computed as
//!   `u64::MAX - u64::MAX % n`), return `x % n`.
//! * `next_f64`: `(next_u64 >> 11) * 2^-53`.
//! * `shuffle`: Fisher-Yates from the back, `j = below(i + 1)`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const DERIVE_SALT: u64 = 0x6A09_E667_F3BC_C909;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A SplitMix64 stream. Cheap to create, `Clone` to fork a replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    state: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::derive(seed, &[])
    }

    /// Stream for the unit of work addressed by `path` under `seed`.
    pub fn derive(seed: u64, path: &[u64]) -> Self {
        let mut h = mix(seed ^ DERIVE_SALT);
        for &p in path {
            h = mix(h ^ mix(p.wrapping_add(GOLDEN)));
        }
        Self { state: h }
    }

    /// A child seed, for handing to APIs that take a plain `u64`.
    pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
        Self::derive(seed, path).next_u64()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let limit = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < limit {
                return x % n;
            }
        }
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        match (hi - lo).checked_add(1) {
            Some(span) => lo + self.below(span),
            None => self.next_u64(),
        }
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> Option<&'a T> {
        if items.is_empty() {
            None
        } else {
            Some(&items[self.index(items.len())])
        }
    }

    /// Index drawn proportionally to `weights`. Weights must be positive and
    /// finite; returns `None` for an empty slice.
    pub fn choose_weighted(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || total <= 0.0 {
            return None;
        }
        let mut target = self.next_f64() * total;
        for (i, w) in weights.iter().enumerate() {
            if target < *w {
                return Some(i);
            }
            target -= w;
        }
        Some(weights.len() - 1)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, uniformly without replacement, in
    /// draw order. `k` is clamped to `n`.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
