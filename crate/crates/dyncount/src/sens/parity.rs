//! Parity counting on complete `b`-ary trees.
//!
//! Place `k` balls on the leaves of a complete tree of height `h`; a node is
//! *odd* when its subtree holds an odd number of balls. The maximum number
//! of odd nodes over all placements equals the `p`-th power of the tree
//! factorization's ℓp sensitivity over the alternating `k`-sparse vectors:
//! an alternating vector makes a node's interval sum `±1` exactly when the
//! node covers an odd number of support positions.
//!
//! The reduced variant scores only `b-1` children per parent (the middle
//! child never appears in the decoder, so its row is zeroed). Which child is
//! excluded does not change the maximum — children are interchangeable
//! inside the max — and fixing the middle one keeps extracted witnesses
//! consistent with the reduced factorization.
//!
//! The maximization over per-child ball counts is an iterated (max, +)
//! convolution, giving `O(h * b * k^2)` time and `O(b * k)` working space
//! per level.

use crate::error::{Error, Result};

/// Guards for the dynamic programs.
#[derive(Debug, Clone, Copy)]
pub struct DpLimits {
    /// Largest accepted branching factor.
    pub max_branching: u64,
    /// Cap on `h * b * (k+1)^2` table work.
    pub max_work: u64,
}

impl Default for DpLimits {
    fn default() -> Self {
        Self { max_branching: 5, max_work: 4_000_000_000 }
    }
}

fn pow_sat(b: u64, e: u32) -> u64 {
    let mut acc = 1u64;
    for _ in 0..e {
        acc = acc.saturating_mul(b);
    }
    acc
}

/// `(max, +)` convolution of two value tables, truncated to `out_len`.
fn maxplus(a: &[u64], c: &[u64], out_len: usize) -> Vec<u64> {
    let mut out = vec![0u64; out_len];
    for (s, slot) in out.iter_mut().enumerate() {
        let lo = s.saturating_sub(c.len() - 1);
        let hi = (a.len() - 1).min(s);
        debug_assert!(lo <= hi, "every split must be representable");
        let mut best = 0u64;
        for i in lo..=hi {
            best = best.max(a[i] + c[s - i]);
        }
        *slot = best;
    }
    out
}

/// A solved dynamic program over a complete tree, retaining enough state to
/// read off any `F(h, k')` for `k' <= k_max` and to extract witnesses.
pub struct ParityDp {
    branching: u64,
    height: u32,
    k_max: u64,
    excluded_child: Option<u64>,
    /// Per level: values when the node itself counts (`w = 1`).
    rows_counting: Vec<Vec<u64>>,
    /// Per level: values when the node itself is excluded (`w = 0`).
    rows_silent: Vec<Vec<u64>>,
    /// Per level `1..=h`: partial convolutions `acc_0..=acc_b` for
    /// backtracking; `acc_c` covers the first `c` children.
    partials: Vec<Vec<Vec<u64>>>,
}

impl ParityDp {
    /// Solves the full-tree program (`excluded_child = None`) or the reduced
    /// one (`Some(middle)`), for all ball counts up to `k_max`.
    pub fn solve(
        branching: u64,
        height: u32,
        k_max: u64,
        excluded_child: Option<u64>,
        limits: &DpLimits,
    ) -> Result<Self> {
        if branching < 2 {
            return Err(Error::InvalidParams("branching factor must be at least 2".into()));
        }
        if branching > limits.max_branching {
            return Err(Error::BudgetExceeded(format!(
                "branching factor {branching} exceeds the dynamic-program limit {}",
                limits.max_branching
            )));
        }
        let leaves = pow_sat(branching, height);
        if k_max > leaves {
            return Err(Error::Infeasible(format!(
                "{k_max} balls do not fit on {leaves} leaves"
            )));
        }
        let work = (height as u64)
            .saturating_mul(branching)
            .saturating_mul((k_max + 1).saturating_mul(k_max + 1));
        if work > limits.max_work {
            return Err(Error::BudgetExceeded(format!(
                "table work {work} exceeds the budget {}",
                limits.max_work
            )));
        }
        if let Some(e) = excluded_child {
            debug_assert!(e < branching);
        }

        let base_cap = k_max.min(1) as usize;
        let mut rows_counting: Vec<Vec<u64>> =
            vec![(0..=base_cap as u64).collect::<Vec<u64>>()];
        let mut rows_silent: Vec<Vec<u64>> = vec![vec![0; base_cap + 1]];
        let mut partials = Vec::new();

        for level in 1..=height {
            let cap = k_max.min(pow_sat(branching, level)) as usize;
            let child_counting = &rows_counting[level as usize - 1];
            let child_silent = &rows_silent[level as usize - 1];
            let mut accs: Vec<Vec<u64>> = vec![vec![0u64]];
            for child in 0..branching {
                let row = match excluded_child {
                    Some(e) if child == e => child_silent,
                    _ => child_counting,
                };
                let prev = accs.last().unwrap();
                let out_len = cap.min(prev.len() - 1 + row.len() - 1) + 1;
                accs.push(maxplus(prev, row, out_len));
            }
            let combined = accs.last().unwrap().clone();
            let mut counting = combined.clone();
            for (kp, v) in counting.iter_mut().enumerate() {
                *v += (kp % 2) as u64;
            }
            rows_counting.push(counting);
            rows_silent.push(combined);
            partials.push(accs);
        }

        Ok(Self {
            branching,
            height,
            k_max,
            excluded_child,
            rows_counting,
            rows_silent,
            partials,
        })
    }

    /// `F(h, k)`: the maximum odd-node count for exactly `k` balls.
    pub fn value(&self, k: u64) -> u64 {
        assert!(k <= self.k_max, "ball count exceeds the solved range");
        self.rows_counting[self.height as usize][k as usize]
    }

    /// `max_{k' <= k} F(h, k')`, the quantity entering the sensitivity.
    pub fn max_value_up_to(&self, k: u64) -> u64 {
        (0..=k.min(self.k_max)).map(|k| self.value(k)).max().unwrap_or(0)
    }

    /// A leaf placement attaining `value(k)`, extracted by backtracking and
    /// suitable for re-scoring with [`odd_node_count`].
    pub fn witness(&self, k: u64) -> Vec<u64> {
        assert!(k <= self.k_max);
        let mut leaves = Vec::with_capacity(k as usize);
        self.backtrack(self.height, 0, k, &mut leaves);
        leaves.sort_unstable();
        leaves
    }

    fn backtrack(&self, level: u32, first_leaf: u64, balls: u64, out: &mut Vec<u64>) {
        if balls == 0 {
            return;
        }
        if level == 0 {
            debug_assert_eq!(balls, 1);
            out.push(first_leaf);
            return;
        }
        let accs = &self.partials[level as usize - 1];
        let child_counting = &self.rows_counting[level as usize - 1];
        let child_silent = &self.rows_silent[level as usize - 1];
        let child_width = pow_sat(self.branching, level - 1);
        let mut remaining = balls as usize;
        for child in (0..self.branching).rev() {
            let row = match self.excluded_child {
                Some(e) if child == e => child_silent,
                _ => child_counting,
            };
            let target = accs[child as usize + 1][remaining];
            let prev = &accs[child as usize];
            let mut chosen = None;
            for kc in 0..=remaining.min(row.len() - 1) {
                if remaining - kc < prev.len() && prev[remaining - kc] + row[kc] == target {
                    chosen = Some(kc);
                    break;
                }
            }
            let kc = chosen.expect("dp tables admit a consistent split");
            self.backtrack(level - 1, first_leaf + child * child_width, kc as u64, out);
            remaining -= kc;
        }
        debug_assert_eq!(remaining, 0);
    }
}

/// `F_b(h, k)` for the full tree.
pub fn parity_dp_full(b: u64, h: u32, k: u64, limits: &DpLimits) -> Result<u64> {
    Ok(ParityDp::solve(b, h, k, None, limits)?.value(k))
}

/// `F̂_b(h, k)` for the reduced tree (middle child of every parent excluded).
pub fn parity_dp_reduced(b: u64, h: u32, k: u64, limits: &DpLimits) -> Result<u64> {
    Ok(ParityDp::solve(b, h, k, Some((b - 1) / 2), limits)?.value(k))
}

/// Scores a ball placement directly: the number of counting nodes whose
/// subtree holds an odd number of balls. `excluded_child` skips one child
/// position per parent at every level below the root.
pub fn odd_node_count(b: u64, h: u32, leaves: &[u64], excluded_child: Option<u64>) -> u64 {
    let width = pow_sat(b, h);
    let mut parity = vec![0u8; width as usize];
    for &leaf in leaves {
        assert!(leaf < width, "leaf out of range");
        parity[leaf as usize] ^= 1;
    }
    let mut count = 0u64;
    for level in 0..=h {
        for (pos, &p) in parity.iter().enumerate() {
            let skipped = level < h
                && matches!(excluded_child, Some(e) if (pos as u64) % b == e);
            if p == 1 && !skipped {
                count += 1;
            }
        }
        if level < h {
            let next: Vec<u8> = parity
                .chunks(b as usize)
                .map(|chunk| chunk.iter().fold(0u8, |a, &x| a ^ x))
                .collect();
            parity = next;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(b: u64, h: u32, k: u64) -> u64 {
        parity_dp_full(b, h, k, &DpLimits::default()).unwrap()
    }

    fn reduced(b: u64, h: u32, k: u64) -> u64 {
        parity_dp_reduced(b, h, k, &DpLimits::default()).unwrap()
    }

    #[test]
    fn base_cases() {
        assert_eq!(full(2, 0, 0), 0);
        assert_eq!(full(2, 0, 1), 1);
        assert_eq!(full(3, 0, 1), 1);
    }

    #[test]
    fn single_ball_lights_the_whole_path() {
        for b in [2u64, 3, 5] {
            for h in 0..=4u32 {
                assert_eq!(full(b, h, 1), h as u64 + 1, "full b={b} h={h}");
                assert_eq!(reduced(b, h, 1), h as u64 + 1, "reduced b={b} h={h}");
            }
        }
    }

    #[test]
    fn small_values_match_hand_counts() {
        // Two balls in separate level-1 subtrees of a height-2 binary tree:
        // two odd leaves, two odd parents, even root.
        assert_eq!(full(2, 2, 2), 4);
        assert_eq!(reduced(2, 1, 1), 2);
    }

    #[test]
    fn exhaustive_placements_agree_small() {
        for (b, h) in [(2u64, 3u32), (3, 2)] {
            let leaves = pow_sat(b, h);
            for k in 0..=leaves {
                let mut best_full = 0;
                let mut best_reduced = 0;
                // Iterate k-subsets of leaves via bitmasks.
                for mask in 0u64..(1 << leaves) {
                    if mask.count_ones() as u64 != k {
                        continue;
                    }
                    let chosen: Vec<u64> =
                        (0..leaves).filter(|i| mask >> i & 1 == 1).collect();
                    best_full = best_full.max(odd_node_count(b, h, &chosen, None));
                    best_reduced =
                        best_reduced.max(odd_node_count(b, h, &chosen, Some((b - 1) / 2)));
                }
                assert_eq!(full(b, h, k), best_full, "full b={b} h={h} k={k}");
                assert_eq!(reduced(b, h, k), best_reduced, "reduced b={b} h={h} k={k}");
            }
        }
    }

    #[test]
    fn witnesses_rescore_to_the_dp_value() {
        for (b, h, k, excl) in [
            (2u64, 4u32, 5u64, None),
            (3, 3, 7, None),
            (3, 3, 7, Some(1u64)),
            (5, 2, 9, Some(2)),
        ] {
            let dp = ParityDp::solve(b, h, k, excl, &DpLimits::default()).unwrap();
            let leaves = dp.witness(k);
            assert_eq!(leaves.len() as u64, k);
            assert_eq!(odd_node_count(b, h, &leaves, excl), dp.value(k));
        }
    }

    #[test]
    fn infeasible_and_budget_errors() {
        let limits = DpLimits::default();
        assert!(matches!(
            parity_dp_full(2, 2, 5, &limits),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            parity_dp_full(7, 2, 3, &limits),
            Err(Error::BudgetExceeded(_))
        ));
        let tiny = DpLimits { max_branching: 5, max_work: 10 };
        assert!(matches!(
            parity_dp_full(2, 4, 10, &tiny),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn reduced_bracket_example() {
        // 3(2 - 1 + 1 - 1/3) = 5 <= F̂_3(2, 3) <= 3*2 + 1 = 7.
        let v = reduced(3, 2, 3);
        assert!((5..=7).contains(&v), "got {v}");
    }
}
