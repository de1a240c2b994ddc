//! The naive factorization `A = I * A`: fresh noise on every prefix.

use crate::error::{Error, Result};

use super::FactorNorms;

#[derive(Debug, Clone)]
pub struct NaiveFactorization {
    horizon: usize,
}

impl NaiveFactorization {
    pub fn new(horizon: usize) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::InvalidParams("horizon must be at least 1".into()));
        }
        Ok(Self { horizon })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn norms(&self) -> FactorNorms {
        FactorNorms {
            l_two_to_inf: 1.0,
            l_frobenius_over_sqrt_t: 1.0,
            r_one_to_two: (self.horizon as f64).sqrt(),
        }
    }

    /// `R v = A v`: prefix sums.
    pub fn right_apply(&self, v: &[i64]) -> Vec<f64> {
        assert_eq!(v.len(), self.horizon, "input length must match the horizon");
        let mut out = Vec::with_capacity(self.horizon);
        let mut acc = 0i64;
        for &e in v {
            acc += e;
            out.push(acc as f64);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_are_identity_and_column_counts() {
        let f = NaiveFactorization::new(16).unwrap();
        let n = f.norms();
        assert_eq!(n.l_two_to_inf, 1.0);
        assert_eq!(n.l_frobenius_over_sqrt_t, 1.0);
        assert_eq!(n.r_one_to_two, 4.0);
    }

    #[test]
    fn right_apply_is_prefix_sums() {
        let f = NaiveFactorization::new(4).unwrap();
        assert_eq!(f.right_apply(&[1, -2, 3, 0]), vec![1.0, -1.0, 2.0, 2.0]);
    }
}
