//! Integer sensitivity vectors and the structured sets they live in.
//!
//! A sensitivity vector is the difference of two difference streams. The sets
//! of interest are parameterized by an interval-sum bound `D` and an ℓ1 bound
//! `k`: a vector belongs to the set when every contiguous interval sums to a
//! value in `[-D, D]` and its ℓ1 norm is at most `k`. For `D = 1` and entries
//! in `{-1, 0, 1}` membership is equivalent to the non-zero entries
//! alternating in sign.

use crate::error::{Error, Result};

/// An integer vector over a fixed time horizon.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SensitivityVector {
    entries: Vec<i64>,
}

impl SensitivityVector {
    /// Wraps raw entries. The horizon must be at least 1.
    pub fn new(entries: Vec<i64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParams("horizon must be at least 1".into()));
        }
        Ok(Self { entries })
    }

    /// The all-zero vector of length `t`.
    pub fn zeros(t: usize) -> Result<Self> {
        Self::new(vec![0; t])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 1 by construction
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    /// ℓ1 norm, checked against overflow.
    pub fn l1_norm(&self) -> Result<u64> {
        let mut acc: u64 = 0;
        for &e in &self.entries {
            acc = acc
                .checked_add(e.unsigned_abs())
                .ok_or(Error::Overflow("summing absolute entries"))?;
        }
        Ok(acc)
    }

    /// Largest absolute contiguous interval sum.
    ///
    /// Computed in O(T) as (max prefix − min prefix) over all prefixes
    /// including the empty prefix 0, which equals the maximum over all
    /// intervals `[i, j]` of `|Σ v[i..=j]|`.
    pub fn interval_sum_bound(&self) -> Result<u64> {
        let mut prefix: i64 = 0;
        let mut max_p: i64 = 0;
        let mut min_p: i64 = 0;
        for &e in &self.entries {
            prefix = prefix
                .checked_add(e)
                .ok_or(Error::Overflow("accumulating prefix sums"))?;
            max_p = max_p.max(prefix);
            min_p = min_p.min(prefix);
        }
        Ok(max_p.abs_diff(min_p))
    }

    /// Whether the non-zero entries alternate in sign.
    ///
    /// Only defined for vectors with entries in `{-1, 0, 1}`; other entries
    /// are an error. For such vectors the result equals
    /// `interval_sum_bound() <= 1`.
    pub fn is_alternating(&self) -> Result<bool> {
        let mut last: i64 = 0;
        for (index, &e) in self.entries.iter().enumerate() {
            if !(-1..=1).contains(&e) {
                return Err(Error::EntryOutOfRange { index, value: e });
            }
            if e != 0 {
                if e == last {
                    return Ok(false);
                }
                last = e;
            }
        }
        Ok(true)
    }
}

/// Parameters of a structured sensitivity-vector set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SetParams {
    interval_bound: u64,
    l1_bound: u64,
    horizon: usize,
}

impl SetParams {
    pub fn new(interval_bound: u64, l1_bound: u64, horizon: usize) -> Result<Self> {
        if interval_bound < 1 || l1_bound < 1 || horizon < 1 {
            return Err(Error::InvalidParams(
                "interval bound, l1 bound and horizon must all be at least 1".into(),
            ));
        }
        Ok(Self { interval_bound, l1_bound, horizon })
    }

    /// Interval-sum bound `D`.
    pub fn interval_bound(&self) -> u64 {
        self.interval_bound
    }

    /// ℓ1 bound `k`.
    pub fn l1_bound(&self) -> u64 {
        self.l1_bound
    }

    /// Time horizon `T`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Tests membership of `v` in the set described by `params`.
pub fn is_member(v: &SensitivityVector, params: &SetParams) -> Result<bool> {
    if v.len() != params.horizon {
        return Err(Error::LengthMismatch { expected: params.horizon, got: v.len() });
    }
    Ok(v.interval_sum_bound()? <= params.interval_bound && v.l1_norm()? <= params.l1_bound)
}

/// A decomposition of a set member into alternating parts.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Non-zero alternating parts, entries in `{-1, 0, 1}`, summing to the
    /// source vector.
    pub parts: Vec<SensitivityVector>,
    /// ℓ1 norm of each part; the weights sum to the ℓ1 norm of the source.
    pub part_weights: Vec<u64>,
}

/// Splits a set member into at most `D` alternating parts whose entrywise sum
/// is the original vector.
///
/// A running counter starts at 0. Scanning the vector left to right, each
/// positive unit first increments the counter and then lands in the part
/// labeled by the new counter value; each negative unit lands in the part
/// labeled by the current counter value and then decrements it. A label is
/// touched exactly when the counter crosses the edge below it, so at most
/// `D` labels are populated. Non-zero parts are returned ordered by counter
/// label 1..=D ascending, then 0..=-D descending.
pub fn decompose(v: &SensitivityVector, params: &SetParams) -> Result<Decomposition> {
    if !is_member(v, params)? {
        return Err(Error::NotAMember(format!(
            "decompose requires interval bound {} and l1 bound {}",
            params.interval_bound, params.l1_bound
        )));
    }
    let d = params.interval_bound as i64;
    let t = params.horizon;
    // Labels live in [-D, D]; slot i stores label i - D.
    let mut slots: Vec<Vec<i64>> = vec![vec![0; t]; 2 * d as usize + 1];
    let slot_of = |label: i64| (label + d) as usize;
    let mut counter: i64 = 0;
    for (step, &e) in v.entries().iter().enumerate() {
        for _ in 0..e.unsigned_abs() {
            if e > 0 {
                counter += 1;
                slots[slot_of(counter)][step] = 1;
            } else {
                slots[slot_of(counter)][step] = -1;
                counter -= 1;
            }
        }
    }
    let mut parts = Vec::new();
    let mut part_weights = Vec::new();
    let order = (1..=d).chain((-d..=0).rev());
    for label in order {
        let slot = &slots[slot_of(label)];
        if slot.iter().any(|&x| x != 0) {
            let part = SensitivityVector::new(slot.clone())?;
            part_weights.push(part.l1_norm()?);
            parts.push(part);
        }
    }
    Ok(Decomposition { parts, part_weights })
}

/// Limits guarding the exhaustive enumerators.
#[derive(Debug, Clone, Copy)]
pub struct EnumLimits {
    /// Largest horizon accepted by the alternating-vector enumerator.
    pub max_horizon_alternating: usize,
    /// Largest value-tree size `(2D+1)^T` accepted by the general enumerator.
    pub max_states_general: u64,
}

impl Default for EnumLimits {
    fn default() -> Self {
        Self { max_horizon_alternating: 22, max_states_general: 10_000_000 }
    }
}

/// Enumerates every alternating vector in `{-1, 0, 1}^t` with ℓ1 norm at most
/// `k`, each exactly once. The count is `1 + Σ_{s=1..=k} 2·C(t, s)`.
pub fn enumerate_alternating(t: usize, k: u64) -> Result<AlternatingIter> {
    enumerate_alternating_with_limits(t, k, &EnumLimits::default())
}

pub fn enumerate_alternating_with_limits(
    t: usize,
    k: u64,
    limits: &EnumLimits,
) -> Result<AlternatingIter> {
    if t < 1 {
        return Err(Error::InvalidParams("horizon must be at least 1".into()));
    }
    if t > limits.max_horizon_alternating {
        return Err(Error::EnumerationLimit(format!(
            "horizon {t} exceeds the alternating enumeration limit {}",
            limits.max_horizon_alternating
        )));
    }
    if k as usize > t {
        return Err(Error::InvalidParams(format!(
            "l1 bound {k} exceeds the horizon {t}; at most one unit fits per step"
        )));
    }
    Ok(AlternatingIter { t, k: k as usize, size: 0, support: Vec::new(), positive_lead: true, done: false })
}

/// Iterator over alternating vectors: support sizes ascending, support
/// positions lexicographic, leading sign `+` before `-`.
pub struct AlternatingIter {
    t: usize,
    k: usize,
    size: usize,
    support: Vec<usize>,
    positive_lead: bool,
    done: bool,
}

impl AlternatingIter {
    fn emit(&self) -> SensitivityVector {
        let mut entries = vec![0i64; self.t];
        let lead: i64 = if self.positive_lead { 1 } else { -1 };
        for (i, &pos) in self.support.iter().enumerate() {
            entries[pos] = if i % 2 == 0 { lead } else { -lead };
        }
        SensitivityVector { entries }
    }

    /// Advances `support` to the next combination of `size` positions out of
    /// `t` in lexicographic order. Returns false when exhausted.
    fn next_combination(&mut self) -> bool {
        let n = self.t;
        let s = self.size;
        let mut i = s;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if self.support[i] != i + n - s {
                break;
            }
        }
        self.support[i] += 1;
        for j in i + 1..s {
            self.support[j] = self.support[j - 1] + 1;
        }
        true
    }
}

impl Iterator for AlternatingIter {
    type Item = SensitivityVector;

    fn next(&mut self) -> Option<SensitivityVector> {
        if self.done {
            return None;
        }
        if self.size == 0 {
            // The zero vector, exactly once.
            let v = self.emit();
            if self.k == 0 {
                self.done = true;
            } else {
                self.size = 1;
                self.support = vec![0];
                self.positive_lead = true;
            }
            return Some(v);
        }
        let v = self.emit();
        // Advance: sign first, then combination, then support size.
        if self.positive_lead {
            self.positive_lead = false;
        } else {
            self.positive_lead = true;
            if !self.next_combination() {
                self.size += 1;
                if self.size > self.k {
                    self.done = true;
                } else {
                    self.support = (0..self.size).collect();
                }
            }
        }
        Some(v)
    }
}

/// Enumerates every vector of length `t` with interval sums in `[-d, d]` and
/// ℓ1 norm at most `k`, pruning on running prefix extremes and ℓ1 budget.
pub fn enumerate_set(t: usize, d: u64, k: u64) -> Result<SetIter> {
    enumerate_set_with_limits(t, d, k, &EnumLimits::default())
}

pub fn enumerate_set_with_limits(t: usize, d: u64, k: u64, limits: &EnumLimits) -> Result<SetIter> {
    if t < 1 || d < 1 || k < 1 {
        return Err(Error::InvalidParams("t, d, k must all be at least 1".into()));
    }
    let mut states: u64 = 1;
    for _ in 0..t {
        states = states.saturating_mul(2 * d + 1);
        if states > limits.max_states_general {
            return Err(Error::EnumerationLimit(format!(
                "(2*{d}+1)^{t} exceeds the enumeration limit {}",
                limits.max_states_general
            )));
        }
    }
    let bound = (d as i64).min(k as i64);
    Ok(SetIter {
        t,
        d: d as i64,
        k: k as i64,
        values: Vec::with_capacity(t),
        prefix: vec![0],
        max_p: vec![0],
        min_p: vec![0],
        l1: vec![0],
        candidate: -bound,
        exhausted: false,
    })
}

/// Depth-first enumerator with branch-and-bound pruning. Values at each
/// position are tried in ascending order, so the output is lexicographic.
pub struct SetIter {
    t: usize,
    d: i64,
    k: i64,
    values: Vec<i64>,
    // Stacks, one entry per committed position plus the root.
    prefix: Vec<i64>,
    max_p: Vec<i64>,
    min_p: Vec<i64>,
    l1: Vec<i64>,
    // Next value to try at the current depth; persists across next() calls.
    candidate: i64,
    exhausted: bool,
}

impl SetIter {
    /// Tries to push `value` at the current depth; returns false when pruned.
    fn try_push(&mut self, value: i64) -> bool {
        let depth = self.values.len();
        let l1 = self.l1[depth] + value.abs();
        if l1 > self.k {
            return false;
        }
        let prefix = self.prefix[depth] + value;
        let max_p = self.max_p[depth].max(prefix);
        let min_p = self.min_p[depth].min(prefix);
        if max_p - min_p > self.d {
            return false;
        }
        self.values.push(value);
        self.prefix.push(prefix);
        self.max_p.push(max_p);
        self.min_p.push(min_p);
        self.l1.push(l1);
        true
    }

    fn pop(&mut self) -> Option<i64> {
        let v = self.values.pop()?;
        self.prefix.pop();
        self.max_p.pop();
        self.min_p.pop();
        self.l1.pop();
        Some(v)
    }
}

impl Iterator for SetIter {
    type Item = SensitivityVector;

    fn next(&mut self) -> Option<SensitivityVector> {
        if self.exhausted {
            return None;
        }
        // Resume depth-first search: descend with the smallest value, emit at
        // full depth, then backtrack to the next untried value.
        let bound = self.d.min(self.k);
        loop {
            if self.values.len() == self.t {
                let out = SensitivityVector { entries: self.values.clone() };
                match self.pop() {
                    Some(last) => self.candidate = last + 1,
                    None => self.exhausted = true,
                }
                return Some(out);
            }
            if self.candidate > bound {
                match self.pop() {
                    Some(last) => self.candidate = last + 1,
                    None => {
                        self.exhausted = true;
                        return None;
                    }
                }
                continue;
            }
            if self.try_push(self.candidate) {
                self.candidate = -bound;
            } else {
                self.candidate += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn vec_of(entries: &[i64]) -> SensitivityVector {
        SensitivityVector::new(entries.to_vec()).unwrap()
    }

    /// O(T^2) oracle for the interval-sum bound.
    fn interval_bound_quadratic(entries: &[i64]) -> u64 {
        let mut best: i64 = 0;
        for i in 0..entries.len() {
            let mut sum = 0i64;
            for &e in &entries[i..] {
                sum += e;
                best = best.max(sum.abs());
            }
        }
        best as u64
    }

    #[test]
    fn interval_sum_bound_examples() {
        assert_eq!(vec_of(&[1, 0, -1, 1]).interval_sum_bound().unwrap(), 1);
        assert_eq!(vec_of(&[1, 0, 1]).interval_sum_bound().unwrap(), 2);
        assert_eq!(vec_of(&[0, 0, 0]).interval_sum_bound().unwrap(), 0);
        assert_eq!(vec_of(&[2, -2, 1]).interval_sum_bound().unwrap(), 2);
    }

    #[test]
    fn membership_examples() {
        let p = SetParams::new(1, 3, 4).unwrap();
        assert!(is_member(&vec_of(&[1, 0, -1, 1]), &p).unwrap());
        let p = SetParams::new(1, 2, 3).unwrap();
        assert!(!is_member(&vec_of(&[1, 0, 1]), &p).unwrap());
        // All six interval sums of (2,-2,1) lie in [-2,2] and the l1 norm is 5.
        let p = SetParams::new(2, 5, 3).unwrap();
        assert!(is_member(&vec_of(&[2, -2, 1]), &p).unwrap());
        assert_eq!(vec_of(&[2, -2, 1]).l1_norm().unwrap(), 5);
    }

    #[test]
    fn membership_length_mismatch_is_an_error() {
        let p = SetParams::new(1, 1, 4).unwrap();
        assert!(is_member(&vec_of(&[1, 0, 1]), &p).is_err());
    }

    #[test]
    fn alternating_examples() {
        assert!(vec_of(&[1, 0, 0, -1, 0, 1]).is_alternating().unwrap());
        assert!(!vec_of(&[1, 0, 1]).is_alternating().unwrap());
        assert!(vec_of(&[0, 0, 0, 0]).is_alternating().unwrap());
        assert!(vec_of(&[1, 0, 2]).is_alternating().is_err());
    }

    #[test]
    fn alternating_equals_unit_interval_bound_exhaustively() {
        // Both directions of the equivalence, over every {-1,0,1}^t vector
        // for t <= 12.
        for t in 1..=12usize {
            let total = 3u64.pow(t as u32);
            for code in 0..total {
                let mut c = code;
                let entries: Vec<i64> = (0..t)
                    .map(|_| {
                        let digit = (c % 3) as i64 - 1;
                        c /= 3;
                        digit
                    })
                    .collect();
                let v = vec_of(&entries);
                let alt = v.is_alternating().unwrap();
                let bound = v.interval_sum_bound().unwrap();
                assert_eq!(alt, bound <= 1, "mismatch at {entries:?}");
            }
        }
    }

    #[test]
    fn decompose_traces_the_counter_procedure() {
        let p = SetParams::new(2, 5, 5).unwrap();
        let d = decompose(&vec_of(&[1, 1, -1, 0, -1]), &p).unwrap();
        assert_eq!(d.parts.len(), 2);
        assert_eq!(d.parts[0].entries(), &[1, 0, 0, 0, -1]);
        assert_eq!(d.parts[1].entries(), &[0, 1, -1, 0, 0]);
        assert_eq!(d.part_weights, vec![2, 2]);
    }

    #[test]
    fn decompose_alternating_is_identity() {
        let p = SetParams::new(1, 3, 5).unwrap();
        let v = vec_of(&[1, 0, -1, 0, 1]);
        let d = decompose(&v, &p).unwrap();
        assert_eq!(d.parts.len(), 1);
        assert_eq!(d.parts[0], v);
    }

    #[test]
    fn decompose_zero_vector_has_no_parts() {
        let p = SetParams::new(2, 2, 3).unwrap();
        let d = decompose(&SensitivityVector::zeros(3).unwrap(), &p).unwrap();
        assert!(d.parts.is_empty());
        assert!(d.part_weights.is_empty());
    }

    #[test]
    fn decompose_rejects_non_members() {
        let p = SetParams::new(1, 1, 3).unwrap();
        assert!(decompose(&vec_of(&[1, 0, 1]), &p).is_err());
    }

    fn binomial(n: u64, k: u64) -> u64 {
        if k > n {
            return 0;
        }
        let mut acc: u64 = 1;
        for i in 0..k.min(n - k) {
            acc = acc * (n - i) / (i + 1);
        }
        acc
    }

    #[test]
    fn alternating_enumeration_counts() {
        // 1 + sum_s 2*C(t, s); the t=2, k=2 case counts 7.
        for (t, k) in [(1usize, 1u64), (2, 1), (2, 2), (5, 3), (8, 4)] {
            let expected: u64 = 1 + (1..=k).map(|s| 2 * binomial(t as u64, s)).sum::<u64>();
            let got = enumerate_alternating(t, k).unwrap().count() as u64;
            assert_eq!(got, expected, "count mismatch at t={t} k={k}");
        }
        assert_eq!(enumerate_alternating(2, 1).unwrap().count(), 5);
        assert_eq!(enumerate_alternating(2, 2).unwrap().count(), 7);
        assert_eq!(enumerate_alternating(1, 1).unwrap().count(), 3);
    }

    #[test]
    fn alternating_enumeration_is_exact_and_unique() {
        for (t, k) in [(4usize, 2u64), (6, 3), (5, 5)] {
            let mut seen = HashSet::new();
            for v in enumerate_alternating(t, k).unwrap() {
                assert!(v.is_alternating().unwrap());
                assert!(v.l1_norm().unwrap() <= k);
                assert!(seen.insert(v.entries().to_vec()), "duplicate vector");
            }
        }
    }

    #[test]
    fn alternating_enumeration_limit_is_enforced() {
        assert!(matches!(
            enumerate_alternating(23, 1),
            Err(Error::EnumerationLimit(_))
        ));
    }

    #[test]
    fn set_enumeration_examples() {
        let one: Vec<_> = enumerate_set(1, 1, 1).unwrap().map(|v| v.entries()[0]).collect();
        assert_eq!(one, vec![-1, 0, 1]);

        let all: HashSet<Vec<i64>> =
            enumerate_set(2, 2, 2).unwrap().map(|v| v.entries().to_vec()).collect();
        assert!(!all.contains(&vec![2, -2]), "l1 norm 4 exceeds 2");
        assert!(all.contains(&vec![2, 0]));

        // Against direct filtering of the full grid.
        let p = SetParams::new(2, 2, 2).unwrap();
        let mut expected = HashSet::new();
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                let v = vec_of(&[a, b]);
                if is_member(&v, &p).unwrap() {
                    expected.insert(v.entries().to_vec());
                }
            }
        }
        assert_eq!(all, expected);
    }

    #[test]
    fn set_enumeration_with_unit_interval_matches_alternating() {
        for (t, k) in [(3usize, 3u64), (4, 2), (5, 4)] {
            let a: HashSet<Vec<i64>> =
                enumerate_alternating(t, k).unwrap().map(|v| v.entries().to_vec()).collect();
            let b: HashSet<Vec<i64>> =
                enumerate_set(t, 1, k).unwrap().map(|v| v.entries().to_vec()).collect();
            assert_eq!(a, b, "set mismatch at t={t} k={k}");
        }
    }

    #[test]
    fn set_enumeration_limit_is_enforced() {
        assert!(matches!(
            enumerate_set(30, 3, 3),
            Err(Error::EnumerationLimit(_))
        ));
    }

    #[test]
    fn decompose_invariants_hold_exhaustively() {
        // Every member of every small set decomposes into alternating parts
        // that sum back to the source, with weights summing to its l1 norm
        // and at most D non-zero parts.
        for t in 1..=6usize {
            for d in 1..=3u64 {
                for k in 1..=6u64 {
                    let p = SetParams::new(d, k, t).unwrap();
                    for v in enumerate_set(t, d, k).unwrap() {
                        let dec = decompose(&v, &p).unwrap();
                        assert!(dec.parts.len() as u64 <= d);
                        let mut sum = vec![0i64; t];
                        for (part, &w) in dec.parts.iter().zip(&dec.part_weights) {
                            assert!(part.is_alternating().unwrap());
                            assert_eq!(part.l1_norm().unwrap(), w);
                            for (s, e) in sum.iter_mut().zip(part.entries()) {
                                *s += e;
                            }
                        }
                        assert_eq!(sum, v.entries());
                        let weight_sum: u64 = dec.part_weights.iter().sum();
                        assert_eq!(weight_sum, v.l1_norm().unwrap());
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn prefix_extremes_match_quadratic_scan(entries in prop::collection::vec(-5i64..=5, 1..40)) {
            let v = SensitivityVector::new(entries.clone()).unwrap();
            prop_assert_eq!(v.interval_sum_bound().unwrap(), interval_bound_quadratic(&entries));
        }

        #[test]
        fn decompose_round_trips_on_random_members(entries in prop::collection::vec(-3i64..=3, 1..24)) {
            let v = SensitivityVector::new(entries).unwrap();
            let d = v.interval_sum_bound().unwrap().max(1);
            let k = v.l1_norm().unwrap().max(1);
            let p = SetParams::new(d, k, v.len()).unwrap();
            let dec = decompose(&v, &p).unwrap();
            let mut sum = vec![0i64; v.len()];
            for part in &dec.parts {
                prop_assert!(part.is_alternating().unwrap());
                for (s, e) in sum.iter_mut().zip(part.entries()) {
                    *s += e;
                }
            }
            prop_assert_eq!(sum.as_slice(), v.entries());
            prop_assert!(dec.parts.len() as u64 <= d);
        }
    }
}
