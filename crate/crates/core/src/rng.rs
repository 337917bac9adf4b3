//! Deterministic per-record random streams.
//!
//! Every record gets its own stream keyed by `(global_seed, record id)`, so
//! masks never depend on worker count or processing order, and any
//! implementation can reproduce the draws bit-exactly. The construction is
//! fixed and documented:
//!
//! 1. `h = FNV-1a-64(record id bytes)`
//! 2. `key = SplitMix64 sequence seeded with global_seed XOR h`, four outputs
//!    forming the 256-bit ChaCha8 key (little-endian)
//! 3. the ChaCha8 stream number separates draw purposes (masking vs
//!    corruption) on the same key
//!
//! Floats are derived from the top 53 bits of `next_u64`, bounded integers by
//! multiply-shift with rejection, so no platform- or library-dependent
//! conversion is involved.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x00000100000001b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// The 64-bit record seed: `global_seed XOR FNV-1a(record id)`.
pub fn record_seed(global_seed: u64, record_id: &str) -> u64 {
    global_seed ^ fnv1a64(record_id.as_bytes())
}

/// Independent draw purposes on one record seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Masking,
    Corruption,
}

impl StreamPurpose {
    fn stream_number(self) -> u64 {
        match self {
            StreamPurpose::Masking => 0,
            StreamPurpose::Corruption => 1,
        }
    }
}

/// Deterministic pseudo-random stream (ChaCha8 core).
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    /// Stream for one record and purpose under a global seed.
    pub fn for_record(global_seed: u64, record_id: &str, purpose: StreamPurpose) -> RandomStream {
        let mut stream = RandomStream::from_seed(record_seed(global_seed, record_id));
        stream.rng.set_stream(purpose.stream_number());
        stream
    }

    /// Stream from a bare 64-bit seed (SplitMix64-expanded to the ChaCha key).
    pub fn from_seed(seed: u64) -> RandomStream {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        RandomStream {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)` from the top 53 bits of `next_u64`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli draw: true with probability `p`.
    ///
    /// `p <= 0` never fires and `p >= 1` always fires. Exactly one draw is
    /// consumed either way, so the stream position does not depend on `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Uniform draw in `[0, n)`, exact (multiply-shift with rejection).
    ///
    /// Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is undefined");
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Choose `k` distinct values from `0..n`, uniformly, in selection order
    /// (partial Fisher-Yates).
    ///
    /// Panics if `k > n`.
    pub fn choose_k(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot choose {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
