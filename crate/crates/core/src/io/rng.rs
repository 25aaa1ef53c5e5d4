//! Portable seeded generator used for every random choice in the pipeline.
//!
//! SplitMix64: the state advances by `0x9E3779B97F4A7C15` per draw and each
//! output is the state run through the standard 64-bit finalizer
//! `(z ^ z>>30) * 0xBF58476D1CE4E5B9`, `(z ^ z>>27) * 0x94D049BB133111EB`,
//! `z ^ z>>31`. Bounded integers use rejection (`x >= 2^64 mod n`, then
//! `x % n`), so any implementation of these few lines reproduces our samples.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        finalize(self.state)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let reject_under = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= reject_under {
                return x % n;
            }
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller (one value per call).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Partial Fisher-Yates: the first `k` entries of `items` become a uniform
    /// sample without replacement, in selection order.
    pub fn partial_shuffle<T>(&mut self, items: &mut [T], k: usize) {
        let len = items.len();
        for i in 0..k.min(len) {
            let j = i + self.below((len - i) as u64) as usize;
            items.swap(i, j);
        }
    }
}

/// 64-bit FNV-1a, used to fold string keys (image ids) into seeds.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Derives an independent stream seed from a base seed and a key path.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(finalize(base.wrapping_add(GOLDEN_GAMMA)), |s, &p| finalize(s ^ finalize(p.wrapping_add(GOLDEN_GAMMA))))
}
