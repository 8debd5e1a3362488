//! Seeded pseudo-random number generation with a pinned algorithm.
//!
//! Reproducibility here is a contract, not a convenience: a dataset or a
//! training run must be byte-identical given the same seed, including across
//! reimplementations in other languages. That rules out opaque library RNGs,
//! so this module pins SplitMix64 (Steele, Lea & Flood, "Fast splittable
//! pseudorandom number generators", OOPSLA 2014), which is small enough to
//! restate exactly:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15                      (wrapping, per draw)
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9         (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB         (wrapping)
//! output = z ^ (z >> 31)
//! ```
//!
//! Derived draws are equally pinned:
//! - `next_f64` = `(next_u64() >> 11) * 2^-53`, uniform in `[0, 1)`.
//! - `gaussian` uses Box-Muller and consumes exactly two uniforms per call:
//!   `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`; the sine branch is discarded.
//! - `shuffle` is a Fisher-Yates pass from the top, swap index drawn as
//!   `next_u64() % (i + 1)` (the modulo bias is irrelevant at the slice
//!   lengths used here and keeps the recipe one line).

/// SplitMix64 generator. Copy of the state copies the stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller. Consumes exactly two uniform draws.
    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // in (0, 1], keeps ln finite
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            xs.swap(i, j);
        }
    }
}
