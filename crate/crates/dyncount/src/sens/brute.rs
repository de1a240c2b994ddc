//! Exhaustive and sampled sensitivity evaluation.
//!
//! The brute-force path is the independent oracle behind every bound and
//! dynamic-program test: it enumerates the whole structured set and
//! maximizes `||R v||_p` directly.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::factor::{Factorization, SqrtFactorization};
use crate::noise::derive_seed;
use crate::parallel::run_chunked;
use crate::vectors::{
    enumerate_alternating_with_limits, enumerate_set_with_limits, EnumLimits, SensitivityVector,
    SetParams,
};

use super::bounds::NormOrder;
use super::SensResult;

fn norm_pow(values: &[f64], p: NormOrder) -> f64 {
    match p {
        NormOrder::One => values.iter().map(|v| v.abs()).sum(),
        NormOrder::Two => values.iter().map(|v| v * v).sum(),
    }
}

/// Maximizes `||R v||_p` over the whole set by enumeration, recording a
/// maximizer. Errors when the set is too large for the configured limits.
pub fn brute_force_sens(
    f: &Factorization,
    p: NormOrder,
    set: &SetParams,
    limits: &EnumLimits,
) -> Result<SensResult> {
    if set.horizon() != f.horizon() {
        return Err(Error::LengthMismatch { expected: f.horizon(), got: set.horizon() });
    }
    let t = set.horizon();
    let k = set.l1_bound();
    let mut best_pow = 0.0f64;
    let mut witness: Option<SensitivityVector> = None;
    let mut consider = |v: SensitivityVector, pow: f64| {
        if witness.is_none() || pow > best_pow {
            best_pow = pow;
            witness = Some(v);
        }
    };
    if set.interval_bound() == 1 {
        let k = k.min(t as u64);
        for v in enumerate_alternating_with_limits(t, k, limits)? {
            let pow = norm_pow(&f.right_apply(v.entries()), p);
            consider(v, pow);
        }
    } else {
        for v in enumerate_set_with_limits(t, set.interval_bound(), k, limits)? {
            let pow = norm_pow(&f.right_apply(v.entries()), p);
            consider(v, pow);
        }
    }
    let value = p.root(best_pow);
    Ok(SensResult {
        value: Some(value),
        lower: Some(value),
        upper: Some(value),
        witness,
        provenance: "brute-force enumeration".into(),
        notes: Vec::new(),
    })
}

/// Result of the sampling estimator for the square-root factorization.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalLower {
    /// Largest sampled `||R v||_2`; a sound lower bound on the sensitivity.
    pub max_norm: f64,
    /// Mean of `||R v||_2^2` over the trials; estimates the expected
    /// squared norm under a uniform draw from the alternating set with
    /// full ℓ1 weight.
    pub mean_square: f64,
    pub trials: usize,
}

/// Samples alternating vectors with exactly `k` support positions chosen
/// uniformly without replacement and a uniform leading sign, and evaluates
/// `||sqrt(A) v||_2` for each.
pub fn empirical_lower_estimate(
    f: &SqrtFactorization,
    set: &SetParams,
    trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<EmpiricalLower> {
    if set.interval_bound() != 1 {
        return Err(Error::InvalidParams(
            "the sampling estimator is defined for interval bound 1".into(),
        ));
    }
    if set.horizon() != f.horizon() {
        return Err(Error::LengthMismatch { expected: f.horizon(), got: set.horizon() });
    }
    let t = set.horizon();
    let k = set.l1_bound() as usize;
    if k > t {
        return Err(Error::InvalidParams(format!("l1 bound {k} exceeds the horizon {t}")));
    }
    if trials == 0 {
        return Err(Error::InvalidParams("at least one trial is required".into()));
    }

    let work = |range: std::ops::Range<usize>| -> (f64, f64) {
        let mut max_sq = 0.0f64;
        let mut sum_sq = 0.0f64;
        for trial in range {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, trial as u64));
            let support = sample_without_replacement(&mut rng, t, k);
            let lead: f64 = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
            let sq = sqrt_norm_sq(f, &support, lead);
            max_sq = max_sq.max(sq);
            sum_sq += sq;
        }
        (max_sq, sum_sq)
    };
    let (max_sq, sum_sq) = run_chunked(
        trials,
        threads,
        work,
        (0.0f64, 0.0f64),
        |(m, s), (cm, cs)| (m.max(cm), s + cs),
    );
    Ok(EmpiricalLower {
        max_norm: max_sq.sqrt(),
        mean_square: sum_sq / trials as f64,
        trials,
    })
}

/// Floyd's algorithm: `k` distinct values from `[0, t)`, returned sorted.
fn sample_without_replacement(rng: &mut ChaCha8Rng, t: usize, k: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for i in (t - k)..t {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        if chosen.contains(&j) {
            chosen.push(i);
        } else {
            chosen.push(j);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// `||sqrt(A) v||_2^2` for an alternating vector with the given sorted
/// support and leading sign, in O(T * k).
fn sqrt_norm_sq(f: &SqrtFactorization, support: &[usize], lead: f64) -> f64 {
    let coeffs = f.coeffs();
    let t = f.horizon();
    let mut sq = 0.0f64;
    let first = support[0];
    for i in first..t {
        let mut row = 0.0f64;
        let mut sign = lead;
        for &j in support {
            if j > i {
                break;
            }
            row += sign * coeffs[i - j];
            sign = -sign;
        }
        sq += row * row;
    }
    sq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::TreeVariant;

    #[test]
    fn naive_brute_force_matches_closed_form() {
        // Largest prefix-sum norm over unit vectors: the all-ones column.
        let f = Factorization::naive(4).unwrap();
        let set = SetParams::new(1, 1, 4).unwrap();
        let r = brute_force_sens(&f, NormOrder::Two, &set, &EnumLimits::default()).unwrap();
        assert_eq!(r.value, Some(2.0));
        let w = r.witness.unwrap();
        assert_eq!(w.entries(), &[1, 0, 0, 0]);
    }

    #[test]
    fn tree_brute_force_matches_parity_count() {
        let f = Factorization::tree(2, TreeVariant::Plain, 4).unwrap();
        let set = SetParams::new(1, 2, 4).unwrap();
        let r = brute_force_sens(&f, NormOrder::Two, &set, &EnumLimits::default()).unwrap();
        assert_eq!(r.value, Some(2.0)); // sqrt(F_2(2,2)) = sqrt(4)
    }

    #[test]
    fn sqrt_brute_force_single_unit_is_the_column_norm() {
        let f = Factorization::sqrt(2).unwrap();
        let set = SetParams::new(1, 1, 2).unwrap();
        let r = brute_force_sens(&f, NormOrder::Two, &set, &EnumLimits::default()).unwrap();
        assert!((r.value.unwrap() - 1.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sampler_is_deterministic_and_sound() {
        let f = SqrtFactorization::new(64).unwrap();
        let set = SetParams::new(1, 3, 64).unwrap();
        let a = empirical_lower_estimate(&f, &set, 500, 7, Some(1)).unwrap();
        let b = empirical_lower_estimate(&f, &set, 500, 7, Some(4)).unwrap();
        assert_eq!(a.max_norm.to_bits(), b.max_norm.to_bits());
        assert_eq!(a.mean_square.to_bits(), b.mean_square.to_bits());

        let upper = super::super::bounds::toeplitz_upper_bound(f.coeffs(), &set).unwrap();
        assert!(a.max_norm <= upper + 1e-9);
    }

    #[test]
    fn sampler_with_single_unit_stays_below_the_column_norm() {
        let f = SqrtFactorization::new(32).unwrap();
        let set = SetParams::new(1, 1, 32).unwrap();
        let e = empirical_lower_estimate(&f, &set, 200, 3, Some(1)).unwrap();
        let c00 = f.gram_diagonal()[0];
        assert!(e.max_norm <= c00.sqrt() + 1e-12);
    }

    #[test]
    fn sampled_norms_match_brute_reference() {
        // The O(T*k) accumulation agrees with a dense multiply.
        let f = SqrtFactorization::new(12).unwrap();
        let support = vec![1usize, 4, 9];
        let lead = -1.0;
        let mut v = vec![0i64; 12];
        let mut sign = lead as i64;
        for &j in &support {
            v[j] = sign;
            sign = -sign;
        }
        let dense: f64 = f.right_apply(&v).iter().map(|x| x * x).sum();
        let fast = sqrt_norm_sq(&f, &support, lead);
        assert!((dense - fast).abs() < 1e-10);
    }
}
