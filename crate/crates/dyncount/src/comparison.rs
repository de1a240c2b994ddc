//! Analytic error-bound formulas for comparing mechanisms across parameter
//! ranges without running anything. Everything here is plain arithmetic, so
//! horizons far beyond what can be simulated (up to `2^127`) are fine.

use crate::error::{Error, Result};
use crate::mechanism::{BudgetKind, PrivacyBudget};
use crate::sens::{ceil_log_ratio_u128, floor_log2_u128};

/// Leading constant of the subtract-tree `MaxSE` bound under zCDP:
/// `sqrt(b-1) / (sqrt(2) log2 b)`.
pub fn zcdp_tree_max_constant(b: u64) -> f64 {
    ((b - 1) as f64).sqrt() / (std::f64::consts::SQRT_2 * (b as f64).log2())
}

/// Leading constant of the subtract-tree `MeanSE` bound under zCDP:
/// `sqrt(b (1 - 1/b^2)) / (2 log2 b)`.
pub fn zcdp_tree_mean_constant(b: u64) -> f64 {
    let bf = b as f64;
    (bf * (1.0 - 1.0 / (bf * bf))).sqrt() / (2.0 * bf.log2())
}

/// Leading constant of the subtract-tree `MaxSE` bound under pure DP:
/// `sqrt((b-1) / (2 log2^3 b))`.
pub fn pure_tree_max_constant(b: u64) -> f64 {
    let lb = (b as f64).log2();
    ((b - 1) as f64 / (2.0 * lb * lb * lb)).sqrt()
}

/// Leading constant of the subtract-tree `MeanSE` bound under pure DP:
/// `sqrt(b (1 - 1/b^2) / (4 log2^3 b))`.
pub fn pure_tree_mean_constant(b: u64) -> f64 {
    let bf = b as f64;
    let lb = bf.log2();
    (bf * (1.0 - 1.0 / (bf * bf)) / (4.0 * lb * lb * lb)).sqrt()
}

/// Scans odd branching factors in `[3, 31]` and returns the minimizer and
/// minimum of `constant`.
pub fn optimal_odd_branching(constant: impl Fn(u64) -> f64) -> (u64, f64) {
    (3..=31u64)
        .step_by(2)
        .map(|b| (b, constant(b)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
}

/// Largest binary digit sum of any integer in `[1, t]`.
pub fn max_binary_digit_sum(t: u128) -> u32 {
    debug_assert!(t >= 1);
    let mut best = t.count_ones();
    for bit in 0..128 {
        if t >> bit & 1 == 1 {
            // Clear this bit and set every lower one.
            let ones_above = (t >> (bit + 1)).count_ones();
            best = best.max(ones_above + bit);
        }
    }
    best
}

/// `sum_{n=1..=t} popcount(n)`, by counting ones per bit position.
pub fn total_binary_digit_sum(t: u128) -> u128 {
    let mut total = 0u128;
    let n = t + 1; // numbers 0..n
    for bit in 0..128 {
        let cycle = match 1u128.checked_shl(bit + 1) {
            Some(c) => c,
            None => break,
        };
        let half = 1u128 << bit;
        if half > t {
            break;
        }
        let full = n / cycle * half;
        let rem = n % cycle;
        total += full + rem.saturating_sub(half);
    }
    total
}

/// One comparison row: analytic `MaxSE`/`MeanSE` bounds for a mechanism at
/// a parameter point, plus the sensitivity bound that produced them.
#[derive(Debug, Clone)]
pub struct BoundRow {
    pub mechanism: String,
    pub horizon: u128,
    pub l1_bound: u128,
    pub interval_bound: u128,
    pub max_se: f64,
    pub mean_se: f64,
    pub sensitivity: f64,
    pub sensitivity_exact: bool,
    pub method: String,
}

fn budget_scale(budget: &PrivacyBudget) -> (f64, bool) {
    match budget.kind {
        // Gaussian: divide the l2 sensitivity by sqrt(2 rho).
        BudgetKind::Zcdp { rho } => (1.0 / (2.0 * rho).sqrt(), false),
        // Laplace: multiply the l1 sensitivity by sqrt(2)/eps.
        BudgetKind::PureDp { epsilon } => (std::f64::consts::SQRT_2 / epsilon, true),
    }
}

/// The square-root factorization row. Under zCDP the bound is
/// `(ln T / pi + 1.067) sqrt(Dk / 2 rho)` for `MaxSE` and the `0.908`
/// constant for `MeanSE`. Under pure DP no comparable column-norm bound is
/// available for this factorization.
pub fn sqrt_bound_row(t: u128, k: u128, d: u128, budget: &PrivacyBudget) -> Result<BoundRow> {
    let (scale, is_pure) = budget_scale(budget);
    if is_pure {
        return Err(Error::InvalidParams(
            "the square-root comparison bound is stated for zCDP".into(),
        ));
    }
    let ln_t = (t as f64).ln();
    let dk = (d as f64) * (k as f64);
    let max_se = (ln_t / std::f64::consts::PI + 1.067) * dk.sqrt() * scale;
    let mean_se = (ln_t / std::f64::consts::PI + 0.908) * dk.sqrt() * scale;
    Ok(BoundRow {
        mechanism: "sqrt".into(),
        horizon: t,
        l1_bound: k,
        interval_bound: d,
        max_se,
        mean_se,
        sensitivity: (dk * (ln_t / std::f64::consts::PI + 1.067)).sqrt(),
        sensitivity_exact: false,
        method: "column-norm upper bound".into(),
    })
}

/// The subtract-tree row with explicit lower-order terms: left-factor norm
/// upper bounds times the split sensitivity bound
/// `D [ceil(k/D) (ceil(log_b(DT/k)) + 2)]^{1/p}`.
pub fn tree_bound_row(
    b: u64,
    t: u128,
    k: u128,
    d: u128,
    budget: &PrivacyBudget,
) -> Result<BoundRow> {
    if b < 3 || b.is_multiple_of(2) {
        return Err(Error::InvalidParams(
            "the subtract-tree bound needs an odd branching factor of at least 3".into(),
        ));
    }
    let (scale, is_pure) = budget_scale(budget);
    let h = ceil_log_ratio_u128(b, t, 1) as f64;
    let bf = b as f64;
    let l_max = ((bf - 1.0) * h + 2.0).sqrt() / std::f64::consts::SQRT_2;
    let complete = pow_u128(b, h as u32) == Some(t);
    // Exact Frobenius form on complete horizons; the general-horizon upper
    // bound (with its b^2 slack) otherwise.
    let l_mean_sq = if complete {
        bf * (1.0 - 1.0 / (bf * bf)) * h + 2.0 * (1.0 + bf.powf(-h))
    } else {
        bf * (1.0 - 1.0 / (bf * bf)) * h + 2.0 * (1.0 + bf * bf + bf.powf(-h))
    };
    let l_mean = l_mean_sq.sqrt() / 2.0;
    let parts = k.div_ceil(d) as f64;
    let levels = ceil_log_ratio_u128(b, d.saturating_mul(t), k) as f64 + 2.0;
    let (sens, max_se, mean_se) = if is_pure {
        let s1 = d as f64 * parts * levels;
        (s1, l_max * s1 * scale, l_mean * s1 * scale)
    } else {
        let s2 = d as f64 * (parts * levels).sqrt();
        (s2, l_max * s2 * scale, l_mean * s2 * scale)
    };
    Ok(BoundRow {
        mechanism: format!("tree-b{b}"),
        horizon: t,
        l1_bound: k,
        interval_bound: d,
        max_se,
        mean_se,
        sensitivity: sens,
        sensitivity_exact: false,
        method: "split sensitivity bound with norm upper bounds".into(),
    })
}

/// The naive factorization row; both error metrics are exact.
pub fn naive_bound_row(t: u128, k: u128, d: u128, budget: &PrivacyBudget) -> BoundRow {
    let (scale, is_pure) = budget_scale(budget);
    let m = d.min(k) as f64;
    let (sens, err) = if is_pure {
        let s1 = m * t as f64;
        (s1, s1 * scale)
    } else {
        let s2 = m * (t as f64).sqrt();
        (s2, s2 * scale)
    };
    BoundRow {
        mechanism: "naive".into(),
        horizon: t,
        l1_bound: k,
        interval_bound: d,
        max_se: err,
        mean_se: err,
        sensitivity: sens,
        sensitivity_exact: true,
        method: "exact closed form".into(),
    }
}

/// The plain binary-tree baseline: sensitivity bound `sqrt(k (1 + log2 T))`
/// (extended to interval bound `D` through the decomposition reduction)
/// times the exact digit-sum norms of the binary left factor. Under pure DP
/// the same digit-count bound applies to the l1 sensitivity.
pub fn binary_baseline_row(t: u128, k: u128, d: u128, budget: &PrivacyBudget) -> BoundRow {
    let (scale, is_pure) = budget_scale(budget);
    let log_t = floor_log2_u128(t) as f64 + if t.is_power_of_two() { 0.0 } else { 1.0 };
    let l_max = (max_binary_digit_sum(t) as f64).sqrt();
    let l_mean = (total_binary_digit_sum(t) as f64 / t as f64).sqrt();
    let parts = k.div_ceil(d) as f64;
    let sens = if is_pure {
        d as f64 * parts * (1.0 + log_t)
    } else {
        d as f64 * (parts * (1.0 + log_t)).sqrt()
    };
    BoundRow {
        mechanism: "binary-baseline".into(),
        horizon: t,
        l1_bound: k,
        interval_bound: d,
        max_se: l_max * sens * scale,
        mean_se: l_mean * sens * scale,
        sensitivity: sens,
        sensitivity_exact: false,
        method: "digit-count sensitivity bound".into(),
    }
}

fn pow_u128(b: u64, e: u32) -> Option<u128> {
    let mut acc = 1u128;
    for _ in 0..e {
        acc = acc.checked_mul(b as u128)?;
    }
    Some(acc)
}

/// All comparison rows at one parameter point. `tree_b` picks the tree
/// branching factor (default 5, the `MaxSE`-optimal choice under zCDP; for
/// pure DP the default is 17).
pub fn bound_rows(
    t: u128,
    k: u128,
    d: u128,
    budget: &PrivacyBudget,
    tree_b: Option<u64>,
) -> Result<Vec<BoundRow>> {
    if t < 1 || k < 1 || d < 1 {
        return Err(Error::InvalidParams("t, k, d must all be at least 1".into()));
    }
    let is_pure = matches!(budget.kind, BudgetKind::PureDp { .. });
    let b = tree_b.unwrap_or(if is_pure { 17 } else { 5 });
    let mut rows = Vec::new();
    if !is_pure {
        rows.push(sqrt_bound_row(t, k, d, budget)?);
    }
    rows.push(tree_bound_row(b, t, k, d, budget)?);
    rows.push(naive_bound_row(t, k, d, budget));
    rows.push(binary_baseline_row(t, k, d, budget));
    Ok(rows)
}
