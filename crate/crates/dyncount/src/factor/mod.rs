//! Factorizations `A = LR` of the lower-triangular all-ones matrix, with
//! structured access to the right factor and online evaluation of `(L z)[t]`.

mod naive;
mod sqrt;
mod tree;

pub use naive::NaiveFactorization;
pub use sqrt::{sqrt_coeff, SqrtFactorization};
pub use tree::{SignedNode, TreeFactorization, TreeVariant};

use crate::error::Result;
use crate::noise::{derive_seed, NoiseKind, NoiseSource};

/// The norms entering the error formulas: largest row ℓ2 norm of `L`,
/// `‖L‖_F / sqrt(T)`, and the largest column ℓ2 norm of `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorNorms {
    pub l_two_to_inf: f64,
    pub l_frobenius_over_sqrt_t: f64,
    pub r_one_to_two: f64,
}

/// One of the concrete factorizations.
#[derive(Debug, Clone)]
pub enum Factorization {
    Naive(NaiveFactorization),
    Sqrt(SqrtFactorization),
    Tree(TreeFactorization),
}

impl Factorization {
    pub fn naive(horizon: usize) -> Result<Self> {
        Ok(Self::Naive(NaiveFactorization::new(horizon)?))
    }

    pub fn sqrt(horizon: usize) -> Result<Self> {
        Ok(Self::Sqrt(SqrtFactorization::new(horizon)?))
    }

    pub fn tree(branching: u64, variant: TreeVariant, horizon: usize) -> Result<Self> {
        Ok(Self::Tree(TreeFactorization::new(branching, variant, horizon)?))
    }

    pub fn horizon(&self) -> usize {
        match self {
            Self::Naive(f) => f.horizon(),
            Self::Sqrt(f) => f.horizon(),
            Self::Tree(f) => f.horizon(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Naive(_) => "naive".into(),
            Self::Sqrt(_) => "sqrt".into(),
            Self::Tree(f) => {
                let v = match f.variant() {
                    TreeVariant::Plain => "plain",
                    TreeVariant::Subtract => "subtract",
                    TreeVariant::SubtractReduced => "subtract-reduced",
                };
                format!("tree-b{}-{v}", f.branching())
            }
        }
    }

    pub fn norms(&self) -> FactorNorms {
        match self {
            Self::Naive(f) => f.norms(),
            Self::Sqrt(f) => f.norms(),
            Self::Tree(f) => f.norms(),
        }
    }

    /// `R v`; the length of the output is the number of rows of `R`.
    pub fn right_apply(&self, v: &[i64]) -> Vec<f64> {
        match self {
            Self::Naive(f) => f.right_apply(v),
            Self::Sqrt(f) => f.right_apply(v),
            Self::Tree(f) => f.right_apply(v),
        }
    }

    /// ℓ2 norm of row `t` of `L`.
    pub fn row_l2(&self, t: usize) -> f64 {
        match self {
            Self::Naive(_) => 1.0,
            Self::Sqrt(f) => f.row_l2(t),
            Self::Tree(f) => f.row_l2(t),
        }
    }

    /// A per-step generator of `(L z)[t]` with i.i.d. node noise at the
    /// given scale, deterministic in the seed.
    pub fn noise_stream(&self, kind: NoiseKind, scale: f64, seed: u64) -> NoiseStream {
        let inner = match self {
            Self::Naive(_) => Inner::Naive { source: NoiseSource::new(kind, scale, seed) },
            Self::Sqrt(f) => Inner::Sqrt {
                factor: f.clone(),
                history: Vec::new(),
                source: NoiseSource::new(kind, scale, seed),
            },
            Self::Tree(f) => Inner::Tree { factor: f.clone(), kind, scale, seed },
        };
        NoiseStream { inner, step: 0, horizon: self.horizon() }
    }
}

/// Streaming view of `(L z)[t]`, one value per step.
///
/// * naive: a fresh draw each step;
/// * square root: the draw history is kept and convolved with the Toeplitz
///   coefficients, O(t) work and O(T) memory per stream;
/// * trees: per-node noise is derived lazily from the seed and the node id,
///   so a step touches only its own signed query nodes.
pub struct NoiseStream {
    inner: Inner,
    step: usize,
    horizon: usize,
}

enum Inner {
    Naive { source: NoiseSource },
    Sqrt { factor: SqrtFactorization, history: Vec<f64>, source: NoiseSource },
    Tree { factor: TreeFactorization, kind: NoiseKind, scale: f64, seed: u64 },
}

impl NoiseStream {
    pub fn step(&self) -> usize {
        self.step
    }
}

impl Iterator for NoiseStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        if self.step >= self.horizon {
            return None;
        }
        let t = self.step;
        self.step += 1;
        let value = match &mut self.inner {
            Inner::Naive { source } => source.sample(),
            Inner::Sqrt { factor, history, source } => {
                history.push(source.sample());
                let coeffs = factor.coeffs();
                history
                    .iter()
                    .enumerate()
                    .map(|(j, z)| coeffs[t - j] * z)
                    .sum()
            }
            Inner::Tree { factor, kind, scale, seed } => factor.noise_at(t, *kind, *scale, *seed),
        };
        Some(value)
    }
}

/// Derives a per-run seed from a base seed and a run tag. Re-exported next
/// to the factorizations because parallel experiments key their noise
/// streams this way.
pub fn run_seed(base: u64, tag: u64) -> u64 {
    derive_seed(base, tag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic_and_bounded() {
        for f in [
            Factorization::naive(16).unwrap(),
            Factorization::sqrt(16).unwrap(),
            Factorization::tree(2, TreeVariant::Plain, 16).unwrap(),
            Factorization::tree(3, TreeVariant::SubtractReduced, 16).unwrap(),
        ] {
            let a: Vec<f64> = f.noise_stream(NoiseKind::Gaussian, 1.0, 3).collect();
            let b: Vec<f64> = f.noise_stream(NoiseKind::Gaussian, 1.0, 3).collect();
            assert_eq!(a, b, "{}", f.label());
            assert_eq!(a.len(), 16);
        }
    }

    #[test]
    fn naive_noise_std_matches_scale() {
        let f = Factorization::naive(100_000).unwrap();
        let draws: Vec<f64> = f.noise_stream(NoiseKind::Gaussian, 2.5, 17).collect();
        let n = draws.len() as f64;
        let mean: f64 = draws.iter().sum::<f64>() / n;
        let var: f64 = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        assert!((std - 2.5).abs() < 0.02 * 2.5, "std {std}");
    }

    #[test]
    fn per_step_variance_tracks_row_norms() {
        // Monte-Carlo check of Var[(Lz)[t]] = scale^2 * ||row t of L||^2,
        // within 3 standard errors of the chi-square sampling law.
        let trials = 4000;
        for f in [
            Factorization::sqrt(24).unwrap(),
            Factorization::tree(3, TreeVariant::Subtract, 24).unwrap(),
            Factorization::tree(2, TreeVariant::Plain, 24).unwrap(),
        ] {
            let t_check = 17;
            let scale = 1.3;
            let mut sumsq = 0.0;
            for trial in 0..trials {
                let seed = run_seed(1000, trial as u64);
                let x = f
                    .noise_stream(NoiseKind::Gaussian, scale, seed)
                    .nth(t_check)
                    .unwrap();
                sumsq += x * x;
            }
            let want = scale * scale * f.row_l2(t_check).powi(2);
            let got = sumsq / trials as f64;
            let band = 3.0 * (2.0 / trials as f64).sqrt() * want;
            assert!((got - want).abs() < band, "{}: {got} vs {want}", f.label());
        }
    }
}
