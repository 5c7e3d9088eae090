use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default suite seed.
pub const DEFAULT_SEED: u64 = 0x5eed_1e4d;

/// Per-check seed: FNV-1a of the check id mixed with the suite seed.
pub fn check_seed(suite_seed: u64, check_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in check_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ suite_seed.rotate_left(29)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Axis-aligned sampling box.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    /// `|x|, |y| <= half` on `copies` plane copies.
    pub fn plane(copies: usize, half: f64) -> Self {
        Self::uniform(2 * copies, -half, half)
    }

    /// Polar copies with `r in [0.3, 2]` and `theta (s - 1) in [0.2, pi - 0.2]`.
    pub fn polar(copies: usize, s: f64) -> Self {
        let (a, b) = (0.2 / (s - 1.0), (PI - 0.2) / (s - 1.0));
        let (tlo, thi) = (a.min(b), a.max(b));
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for _ in 0..copies {
            lo.extend([0.3, tlo]);
            hi.extend([2.0, thi]);
        }
        Self { lo, hi }
    }

    /// Replaces the range of coordinate `i`.
    pub fn with(mut self, i: usize, lo: f64, hi: f64) -> Self {
        self.lo[i] = lo;
        self.hi[i] = hi;
        self
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| if a == b { a } else { rng.random_range(a..b) })
            .collect()
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| format!("[{a:.4}, {b:.4}]"))
            .collect();
        parts.join(" x ")
    }
}
