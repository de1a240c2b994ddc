//! Closed-form sensitivity brackets and the reduction between structured
//! sets.
//!
//! The reduction: any member of the set with interval bound `D` and ℓ1
//! bound `k` splits into at most `D` alternating parts, so
//!
//! ```text
//!   D * sens_p(R, S(1, floor(k/D)))  <=  sens_p(R, S(D, k))
//!       <=  max over k_1+..+k_D = k of  sum_d sens_p(R, S(1, k_d))
//!       <=  D * U(ceil(k/D))
//! ```
//!
//! for any concave non-decreasing `U` dominating `k |-> sens_p(R, S(1,k))`.

use crate::error::{Error, Result};
use crate::vectors::SetParams;

/// Norm order for sensitivity computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormOrder {
    One,
    Two,
}

impl NormOrder {
    /// `x^(1/p)`.
    pub fn root(&self, x: f64) -> f64 {
        match self {
            NormOrder::One => x,
            NormOrder::Two => x.sqrt(),
        }
    }

    /// `x^p`.
    pub fn power(&self, x: f64) -> f64 {
        match self {
            NormOrder::One => x,
            NormOrder::Two => x * x,
        }
    }
}

/// Smallest `a >= 0` with `b^a >= k` (that is, `ceil(log_b k)` for `k >= 1`).
pub fn ceil_log(b: u64, k: u64) -> u32 {
    debug_assert!(b >= 2 && k >= 1);
    let mut a = 0;
    let mut p = 1u64;
    while p < k {
        p = p.saturating_mul(b);
        a += 1;
    }
    a
}

/// Smallest `a >= 0` with `b^a * denom >= num`: `ceil(log_b(num/denom))`.
pub fn ceil_log_ratio(b: u64, num: u64, denom: u64) -> u32 {
    debug_assert!(b >= 2 && num >= 1 && denom >= 1);
    let mut a = 0;
    let mut p = denom as u128;
    while p < num as u128 {
        p = p.saturating_mul(b as u128);
        a += 1;
    }
    a
}

/// Largest `a >= 0` with `b^a * denom <= num`: `floor(log_b(num/denom))`;
/// requires `num >= denom`.
pub fn floor_log_ratio(b: u64, num: u64, denom: u64) -> u32 {
    debug_assert!(b >= 2 && num >= denom && denom >= 1);
    let mut a = 0;
    let mut p = denom as u128 * b as u128;
    while p <= num as u128 {
        p = p.saturating_mul(b as u128);
        a += 1;
    }
    a
}

/// `ceil(log_b(num/denom))` over u128 operands.
pub fn ceil_log_ratio_u128(b: u64, num: u128, denom: u128) -> u32 {
    debug_assert!(b >= 2 && num >= 1 && denom >= 1);
    let mut a = 0;
    let mut p = denom;
    while p < num {
        p = p.saturating_mul(b as u128);
        a += 1;
    }
    a
}

/// `floor(log2 t)` for `t >= 1`.
pub fn floor_log2_u128(t: u128) -> u32 {
    debug_assert!(t >= 1);
    127 - t.leading_zeros()
}

/// Bracket on the maximum odd-node count of the full tree:
/// `k(h - a + 1) <= F_b(h, k) <= k(h - a + 1) + (b^a - 1)/(b - 1)` with
/// `a = ceil(log_b k)`. Returned on the count scale (the p-th power of the
/// sensitivity), exact integers.
pub fn full_tree_count_bracket(b: u64, h: u32, k: u64) -> (u64, u64) {
    let a = ceil_log(b, k);
    debug_assert!(a <= h);
    let linear = k * (h as u64 - a as u64 + 1);
    let tail = (b.pow(a) - 1) / (b - 1);
    (linear, linear + tail)
}

/// Bracket on the reduced-tree count, scaled by `b` to stay in integers:
/// `k(b(h - a + 1) - 1) <= b * F̂_b(h, k) <= b(k(h - a + 1)) + b^a`.
pub fn reduced_tree_count_bracket_scaled(b: u64, h: u32, k: u64) -> (u64, u64) {
    let a = ceil_log(b, k);
    debug_assert!(a <= h);
    let linear = k * (h as u64 - a as u64 + 1);
    let lower = k * (b * (h as u64 - a as u64 + 1) - 1);
    let upper = b * linear + b.pow(a);
    (lower, upper)
}

/// Closed sensitivity bracket for a complete tree on the count scale;
/// `reduced` selects the zeroed-row variant. The reduced lower bound is not
/// available for `b = 2`.
pub fn complete_tree_sens_bracket_pow(
    b: u64,
    h: u32,
    k: u64,
    reduced: bool,
) -> (Option<f64>, f64) {
    let k = k.min(b.pow(h));
    let a = ceil_log(b, k);
    if reduced {
        let upper = k as f64 * (h as f64 - a as f64 + 1.0) + (b as f64).powi(a as i32 - 1);
        if b == 2 {
            return (None, upper);
        }
        let at = |kk: f64, aa: f64| kk * (h as f64 - aa + 1.0 - 1.0 / b as f64);
        let lower = at(k as f64, a as f64).max(at((b as f64).powi(a as i32 - 1), a as f64 - 1.0));
        (Some(lower), upper)
    } else {
        let upper =
            k as f64 * (h as f64 - a as f64 + 1.0) + ((b.pow(a) - 1) / (b - 1)) as f64;
        let at = |kk: f64, aa: f64| kk * (h as f64 - aa + 1.0);
        let lower = at(k as f64, a as f64).max(at((b as f64).powi(a as i32 - 1), a as f64 - 1.0));
        (Some(lower), upper)
    }
}

/// General-horizon closed bracket for the reduced tree (requires `b >= 3`),
/// on the count scale. The lower bound uses the complete tree one level
/// down; the upper bound embeds into the complete tree of height
/// `h = ceil(log_b T)`:
/// `k~ (h - ceil(log_b k~) - 1/b) <= sens^p <= k (ceil(log_b (T/k)) + 2)`.
pub fn general_t_reduced_bracket_pow(b: u64, t: u64, k: u64) -> (Option<f64>, f64) {
    debug_assert!(b >= 3);
    let h = ceil_log(b, t);
    let upper = k as f64 * (ceil_log_ratio(b, t, k) as f64 + 2.0);
    if h == 0 {
        return (None, upper);
    }
    let k_t = k.min(b.pow(h - 1));
    let lower = k_t as f64 * (h as f64 - ceil_log(b, k_t) as f64 - 1.0 / b as f64);
    (if lower > 0.0 { Some(lower) } else { None }, upper)
}

/// Bracket for general interval bound `D` via the decomposition reduction,
/// specialized to the reduced tree's closed forms (requires `b >= 3`):
///
/// `D [ floor(k/D) (floor(log_b(DT/k)) - 1/b) ]^{1/p}
///    <= sens_p <= D [ ceil(k/D) (ceil(log_b(DT/k)) + 2) ]^{1/p}`.
///
/// The lower bound is only stated for `D <= k <= T/b`; outside that range
/// (or for `b = 2`) only the upper bound is returned.
pub fn general_d_tree_bracket(
    b: u64,
    t: u64,
    set: &SetParams,
    p: NormOrder,
) -> (Option<f64>, f64) {
    let d = set.interval_bound();
    let k = set.l1_bound();
    let upper_inner =
        (k.div_ceil(d)) as f64 * (ceil_log_ratio(b, d.saturating_mul(t), k) as f64 + 2.0);
    let upper = d as f64 * p.root(upper_inner);
    let lower_applicable = b >= 3 && d <= k && k.saturating_mul(b) <= t && k / d >= 1;
    if !lower_applicable {
        return (None, upper);
    }
    let lower_inner = (k / d) as f64
        * (floor_log_ratio(b, d.saturating_mul(t), k) as f64 - 1.0 / b as f64);
    let lower = d as f64 * p.root(lower_inner.max(0.0));
    (Some(lower), upper)
}

/// Upper bound `sqrt(D k) * ||R||_{1->2}` for a lower-triangular Toeplitz
/// right factor with non-increasing, non-negative diagonal values; the
/// monotonicity is checked and violations are an error.
pub fn toeplitz_upper_bound(coeffs: &[f64], set: &SetParams) -> Result<f64> {
    for (i, w) in coeffs.windows(2).enumerate() {
        if w[1] > w[0] {
            return Err(Error::NotMonotone(format!(
                "diagonal value increases at offset {}",
                i + 1
            )));
        }
    }
    if coeffs.iter().any(|&r| r < 0.0) {
        return Err(Error::NotMonotone("diagonal values must be non-negative".into()));
    }
    let col_norm_sq: f64 = coeffs.iter().map(|r| r * r).sum();
    Ok(((set.interval_bound() * set.l1_bound()) as f64).sqrt() * col_norm_sq.sqrt())
}

/// The decomposition-based bracket: given an evaluator for the alternating
/// sensitivity `base(k') = sens_p(R, S(1, k'))` and a certified concave
/// non-decreasing upper bound `upper(k')`, returns
/// `(D * base(floor(k/D)), D * upper(ceil(k/D)))`.
///
/// `upper` is sanity-checked on the integer grid `0..=ceil(k/D)+1`; a
/// decreasing or convex violation is an error.
pub fn reduction_bounds(
    base: impl Fn(u64) -> Result<f64>,
    upper: impl Fn(u64) -> f64,
    set: &SetParams,
) -> Result<(f64, f64)> {
    let d = set.interval_bound();
    let k = set.l1_bound();
    let hi = k.div_ceil(d);
    let mut prev = upper(0);
    let mut prev_step = f64::INFINITY;
    for i in 1..=hi + 1 {
        let cur = upper(i);
        let step = cur - prev;
        if step < -1e-12 * cur.abs().max(1.0) {
            return Err(Error::NotMonotone(format!(
                "certified upper bound decreases between {} and {i}",
                i - 1
            )));
        }
        if step > prev_step + 1e-9 * cur.abs().max(1.0) {
            return Err(Error::NotMonotone(format!(
                "certified upper bound is not concave between {} and {i}",
                i - 1
            )));
        }
        prev = cur;
        prev_step = step;
    }
    let lower = d as f64 * base(k / d)?;
    let upr = d as f64 * upper(hi);
    Ok((lower, upr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_helpers() {
        assert_eq!(ceil_log(2, 1), 0);
        assert_eq!(ceil_log(2, 2), 1);
        assert_eq!(ceil_log(2, 5), 3);
        assert_eq!(ceil_log(3, 9), 2);
        assert_eq!(ceil_log_ratio(3, 9, 9), 0);
        assert_eq!(ceil_log_ratio(3, 10, 9), 1);
        assert_eq!(ceil_log_ratio(2, 1024, 16), 6);
        assert_eq!(floor_log_ratio(2, 1024, 16), 6);
        assert_eq!(floor_log_ratio(2, 1023, 16), 5);
    }

    #[test]
    fn toeplitz_upper_examples() {
        // T=4, k=2, D=1: sqrt(2 * 1.48828125) ~ 1.72527.
        let f = crate::factor::SqrtFactorization::new(4).unwrap();
        let set = SetParams::new(1, 2, 4).unwrap();
        let got = toeplitz_upper_bound(f.coeffs(), &set).unwrap();
        assert!((got - (2.0f64 * 1.48828125).sqrt()).abs() < 1e-12);
        assert!((got - 1.72527).abs() < 1e-5);
    }

    #[test]
    fn toeplitz_rejects_non_monotone() {
        let set = SetParams::new(1, 1, 3).unwrap();
        assert!(toeplitz_upper_bound(&[1.0, 0.2, 0.5], &set).is_err());
        assert!(toeplitz_upper_bound(&[1.0, -0.1, 0.0], &set).is_err());
    }

    #[test]
    fn reduction_collapses_at_unit_interval_bound() {
        let set = SetParams::new(1, 5, 8).unwrap();
        let (lo, hi) =
            reduction_bounds(|k| Ok(k as f64), |k| k as f64 + 1.0, &set).unwrap();
        assert_eq!(lo, 5.0);
        assert_eq!(hi, 6.0);
    }

    #[test]
    fn reduction_at_equal_bounds_uses_single_units() {
        // D = k: floor(k/D) = 1, so the lower bound is D * base(1).
        let set = SetParams::new(4, 4, 8).unwrap();
        let (lo, _) =
            reduction_bounds(|k| Ok((k as f64).sqrt()), |k| (k as f64).sqrt(), &set).unwrap();
        assert_eq!(lo, 4.0);
    }

    #[test]
    fn reduction_rejects_bad_upper_bounds() {
        let set = SetParams::new(2, 6, 8).unwrap();
        let decreasing = reduction_bounds(|_| Ok(0.0), |k| -(k as f64), &set);
        assert!(decreasing.is_err());
        let convex = reduction_bounds(|_| Ok(0.0), |k| (k * k) as f64, &set);
        assert!(convex.is_err());
    }

    #[test]
    fn tree_brackets_have_integer_forms() {
        let (lo, hi) = full_tree_count_bracket(2, 3, 1);
        assert_eq!((lo, hi), (4, 4));
        let (lo, hi) = full_tree_count_bracket(3, 2, 3);
        assert_eq!((lo, hi), (6, 7));
        let (lo, hi) = reduced_tree_count_bracket_scaled(3, 2, 3);
        // 3*(3*2-1) = 15 <= 3*F̂ and 3*F̂ <= 3*6+3 = 21, i.e. F̂ in [5, 7].
        assert_eq!((lo, hi), (15, 21));
    }
}
