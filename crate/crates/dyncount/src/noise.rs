//! Seeded noise sources.
//!
//! Everything is deterministic given a seed. Streams that need many
//! independent generators (per trial, per node of a tree, per graph node)
//! derive child seeds with a SplitMix64 mix, so a single u64 seed
//! reproduces an entire experiment. Cryptographic-quality DP sampling is
//! out of scope.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// SplitMix64 finalizer; decorrelates derived seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `seed` and a stream tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag.wrapping_add(0x6a09_e667_f3bc_c909)))
}

/// Uniform draw in the open interval (0, 1).
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// The two noise distributions used by the mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Gaussian,
    Laplace,
}

/// A seeded stream of i.i.d. draws at a fixed scale.
///
/// For `Gaussian` the scale is the standard deviation; for `Laplace` it is
/// the classical scale parameter `b` (standard deviation `b*sqrt(2)`).
/// A scale of zero short-circuits to exact zeros.
pub struct NoiseSource {
    kind: NoiseKind,
    scale: f64,
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NoiseSource {
    pub fn new(kind: NoiseKind, scale: f64, seed: u64) -> Self {
        Self { kind, scale, rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Next draw.
    pub fn sample(&mut self) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        match self.kind {
            NoiseKind::Gaussian => self.standard_normal() * self.scale,
            NoiseKind::Laplace => self.standard_laplace() * self.scale,
        }
    }

    /// Box-Muller; the paired value is kept for the next call.
    fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = open_unit(&mut self.rng);
        let u2 = open_unit(&mut self.rng);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Inverse-CDF sample at unit scale.
    fn standard_laplace(&mut self) -> f64 {
        let u = open_unit(&mut self.rng) - 0.5;
        -u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }
}

/// One draw from a derived, single-use source. Used for lazily evaluated
/// per-node noise: re-querying the same `(seed, tag)` returns the same value.
pub fn single_draw(kind: NoiseKind, scale: f64, seed: u64, tag: u64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    NoiseSource::new(kind, scale, derive_seed(seed, tag)).sample()
}
