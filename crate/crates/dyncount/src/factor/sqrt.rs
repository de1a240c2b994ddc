//! The square-root factorization `L = R = sqrt(A)`.
//!
//! `sqrt(A)` is lower-triangular Toeplitz; the value on the `t`-th diagonal
//! is the central binomial ratio `C(2t, t) / 4^t`, generated here by the
//! stable recurrence `r_t = r_{t-1} * (2t-1) / (2t)`. The sequence is
//! strictly decreasing, strictly positive, and sandwiched between
//! `1/sqrt(pi*(t+1))` and `1/sqrt(pi*t)`.

use std::sync::Arc;

use crate::error::{Error, Result};

use super::FactorNorms;

/// Coefficient `r_t` of the square-root matrix, via the recurrence.
pub fn sqrt_coeff(t: usize) -> f64 {
    let mut r = 1.0f64;
    for i in 1..=t {
        r *= (2 * i - 1) as f64 / (2 * i) as f64;
    }
    r
}

#[derive(Debug, Clone)]
pub struct SqrtFactorization {
    horizon: usize,
    coeffs: Arc<[f64]>,
    // Suffix sums of r^2: diag[i] = c(i, i) = sum_{l <= T-1-i} r_l^2.
    diagonal: Arc<[f64]>,
}

impl SqrtFactorization {
    pub fn new(horizon: usize) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::InvalidParams("horizon must be at least 1".into()));
        }
        let mut coeffs = Vec::with_capacity(horizon);
        let mut r = 1.0f64;
        coeffs.push(r);
        for t in 1..horizon {
            r *= (2 * t - 1) as f64 / (2 * t) as f64;
            coeffs.push(r);
        }
        let mut diagonal = vec![0.0f64; horizon];
        let mut acc = 0.0f64;
        for i in (0..horizon).rev() {
            acc += coeffs[horizon - 1 - i] * coeffs[horizon - 1 - i];
            diagonal[i] = acc;
        }
        Ok(Self { horizon, coeffs: coeffs.into(), diagonal: diagonal.into() })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Gram entry `c(i, j) = (R^T R)[i, j]`, by the closed-form sum
    /// `sum_{l=0}^{T-1-max(i,j)} r_l * r_{l+|i-j|}`.
    pub fn gram_entry(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.horizon && j < self.horizon, "gram index out of range");
        let d = i.abs_diff(j);
        let hi = self.horizon - i.max(j);
        let mut acc = 0.0;
        for l in 0..hi {
            acc += self.coeffs[l] * self.coeffs[l + d];
        }
        acc
    }

    /// All diagonal Gram entries `c(i, i)`, precomputed in O(T).
    pub fn gram_diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// ℓ2 norm of row `t` of `L = sqrt(A)`.
    pub fn row_l2(&self, t: usize) -> f64 {
        self.diagonal[self.horizon - 1 - t].sqrt()
    }

    /// Largest ℓ1 norm over columns of `R` (attained by column 0).
    pub fn column_l1_max(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    pub fn norms(&self) -> FactorNorms {
        let c00 = self.diagonal[0];
        let frob_sq: f64 = self.diagonal.iter().sum();
        FactorNorms {
            l_two_to_inf: c00.sqrt(),
            l_frobenius_over_sqrt_t: (frob_sq / self.horizon as f64).sqrt(),
            r_one_to_two: c00.sqrt(),
        }
    }

    /// `R v` as a convolution, exploiting sparsity of `v`.
    pub fn right_apply(&self, v: &[i64]) -> Vec<f64> {
        assert_eq!(v.len(), self.horizon, "input length must match the horizon");
        let support: Vec<(usize, f64)> = v
            .iter()
            .enumerate()
            .filter(|(_, &e)| e != 0)
            .map(|(j, &e)| (j, e as f64))
            .collect();
        let mut out = vec![0.0f64; self.horizon];
        for (j, val) in support {
            for i in j..self.horizon {
                out[i] += self.coeffs[i - j] * val;
            }
        }
        out
    }
}
