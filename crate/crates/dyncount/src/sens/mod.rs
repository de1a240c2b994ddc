//! Sensitivity of a right factor over the structured vector sets: exact
//! dynamic programs for trees, closed-form brackets, brute-force oracles and
//! a sampling estimator for the square-root factorization.

mod bounds;
mod brute;
mod parity;

pub use bounds::{
    ceil_log, ceil_log_ratio, ceil_log_ratio_u128, complete_tree_sens_bracket_pow,
    floor_log2_u128, floor_log_ratio, full_tree_count_bracket, general_d_tree_bracket,
    general_t_reduced_bracket_pow, reduced_tree_count_bracket_scaled, reduction_bounds,
    toeplitz_upper_bound, NormOrder,
};
pub use brute::{brute_force_sens, empirical_lower_estimate, EmpiricalLower};
pub use parity::{odd_node_count, parity_dp_full, parity_dp_reduced, DpLimits, ParityDp};

use crate::error::{Error, Result};
use crate::factor::{Factorization, SqrtFactorization, TreeFactorization, TreeVariant};
use crate::vectors::{EnumLimits, SensitivityVector, SetParams};

/// How a sensitivity query should be answered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact value via the parity-counting dynamic program (trees only,
    /// complete horizons only; exact for interval bound 1, bracketed above).
    ExactDp,
    /// Closed-form brackets.
    ClosedBound,
    /// Exhaustive enumeration with a witness.
    BruteForce,
    /// Sampling lower bound (square-root factorization only).
    Empirical,
}

/// Outcome of a sensitivity query. When `value` is present it is exact;
/// otherwise `lower`/`upper` bracket the true sensitivity.
#[derive(Debug, Clone)]
pub struct SensResult {
    pub value: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub witness: Option<SensitivityVector>,
    pub provenance: String,
    /// Labeled extras, e.g. the sampling estimator's mean-square estimate.
    pub notes: Vec<(String, f64)>,
}

impl SensResult {
    fn bracket(lower: Option<f64>, upper: f64, provenance: String) -> Self {
        Self { value: None, lower, upper: Some(upper), witness: None, provenance, notes: Vec::new() }
    }
}

/// Tuning knobs shared by the sensitivity paths.
#[derive(Debug, Clone, Copy)]
pub struct SensOptions {
    pub enum_limits: EnumLimits,
    pub dp_limits: DpLimits,
    /// Trials for the sampling fallback of the Toeplitz lower bound.
    pub empirical_trials: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for SensOptions {
    fn default() -> Self {
        Self {
            enum_limits: EnumLimits::default(),
            dp_limits: DpLimits::default(),
            empirical_trials: 2000,
            seed: 0xD15C,
            threads: None,
        }
    }
}

fn excluded_child(tree: &TreeFactorization) -> Option<u64> {
    match tree.variant() {
        TreeVariant::SubtractReduced => Some((tree.branching() - 1) / 2),
        _ => None,
    }
}

/// Turns a ball placement into the alternating vector with that support.
fn placement_to_vector(t: usize, leaves: &[u64]) -> SensitivityVector {
    let mut entries = vec![0i64; t];
    let mut sign = 1i64;
    for &leaf in leaves {
        entries[leaf as usize] = sign;
        sign = -sign;
    }
    SensitivityVector::new(entries).expect("non-empty horizon")
}

/// Sensitivity of a tree factorization.
///
/// With `ExactDp` and interval bound 1 the value is exact; for larger
/// interval bounds the result is a bracket built from dynamic-program
/// values (lower via the scaled copy of the best smaller-set vector, upper
/// via the best split of the ℓ1 budget), intersected with the closed-form
/// bracket. `ExactDp` requires the horizon to fill the tree.
pub fn tree_sens(
    tree: &TreeFactorization,
    p: NormOrder,
    set: &SetParams,
    method: Method,
    opts: &SensOptions,
) -> Result<SensResult> {
    if set.horizon() != tree.horizon() {
        return Err(Error::LengthMismatch { expected: tree.horizon(), got: set.horizon() });
    }
    let b = tree.branching();
    let h = tree.height();
    let t = tree.horizon() as u64;
    let d = set.interval_bound();
    let k = set.l1_bound();
    let reduced = tree.variant() == TreeVariant::SubtractReduced;
    match method {
        Method::ExactDp => {
            if !tree.is_complete() {
                return Err(Error::Infeasible(format!(
                    "the dynamic program runs on complete trees; horizon {t} does not fill \
                     the {b}-ary tree of height {h} (use the closed bounds or brute force)"
                )));
            }
            let leaves = t;
            let k_cap = k.min(leaves);
            let dp = ParityDp::solve(b, h, k_cap, excluded_child(tree), &opts.dp_limits)?;
            if d == 1 {
                let best_k = (0..=k_cap).max_by_key(|&kk| dp.value(kk)).unwrap_or(0);
                let pow = dp.value(best_k);
                let witness = placement_to_vector(t as usize, &dp.witness(best_k));
                let value = p.root(pow as f64);
                return Ok(SensResult {
                    value: Some(value),
                    lower: Some(value),
                    upper: Some(value),
                    witness: Some(witness),
                    provenance: "parity-counting dynamic program".into(),
                    notes: Vec::new(),
                });
            }
            // Bracket for larger interval bounds, from dynamic-program values.
            let g: Vec<f64> =
                (0..=k_cap).map(|kk| p.root(dp.max_value_up_to(kk) as f64)).collect();
            let lower = d as f64 * g[(k / d).min(k_cap) as usize];
            let split_upper = split_max(&g, d, k);
            let (closed_lower, closed_upper) = closed_bracket(b, h, t, k, d, p, reduced);
            let upper = match closed_upper {
                Some(cu) => split_upper.min(cu),
                None => split_upper,
            };
            let lower = match closed_lower {
                Some(cl) => lower.max(cl),
                None => lower,
            };
            Ok(SensResult {
                value: None,
                lower: Some(lower),
                upper: Some(upper),
                witness: None,
                provenance:
                    "dynamic-program bracket (exact values are only available for interval bound 1)"
                        .into(),
                notes: Vec::new(),
            })
        }
        Method::ClosedBound => {
            let (lower, upper) = closed_bracket(b, h, t, k, d, p, reduced);
            let upper = upper.ok_or_else(|| {
                Error::Infeasible("no closed upper bound for this configuration".into())
            })?;
            Ok(SensResult::bracket(lower, upper, "closed-form bracket".into()))
        }
        Method::BruteForce => brute_force_sens(
            &Factorization::Tree(tree.clone()),
            p,
            set,
            &opts.enum_limits,
        ),
        Method::Empirical => Err(Error::InvalidParams(
            "the sampling estimator applies to the square-root factorization".into(),
        )),
    }
}

/// Closed-form sensitivity bracket for a tree, on the sensitivity scale.
fn closed_bracket(
    b: u64,
    h: u32,
    t: u64,
    k: u64,
    d: u64,
    p: NormOrder,
    reduced: bool,
) -> (Option<f64>, Option<f64>) {
    if reduced {
        if d == 1 {
            let (lo, hi) = general_t_reduced_bracket_pow(b, t, k.min(t));
            (lo.map(|x| p.root(x)), Some(p.root(hi)))
        } else {
            let set = SetParams::new(d, k, t as usize).expect("validated upstream");
            let (lo, hi) = general_d_tree_bracket(b, t, &set, p);
            (lo, Some(hi))
        }
    } else {
        // Plain tree: complete-tree bracket; for truncated horizons the
        // embedding into the complete tree keeps the upper bound valid but
        // forfeits the lower one.
        let complete = b.pow(h) == t;
        let kq = k.div_ceil(d).min(b.pow(h));
        let (lo1, hi1) = complete_tree_sens_bracket_pow(b, h, kq, false);
        let upper = d as f64 * p.root(hi1);
        let lower = if complete {
            let kfl = (k / d).min(b.pow(h));
            if kfl == 0 {
                Some(0.0)
            } else {
                let (lo, _) = complete_tree_sens_bracket_pow(b, h, kfl, false);
                lo.map(|x| d as f64 * p.root(x))
            }
        } else {
            None
        };
        let _ = lo1;
        (lower, Some(upper))
    }
}

/// Best value of `sum_d g[k_d]` over splits `k_1 + .. + k_d = k_eff`, where
/// each part is capped by the table length.
fn split_max(g: &[f64], d: u64, k: u64) -> f64 {
    let cap = g.len() - 1;
    let k_eff = (k as usize).min(cap * d as usize);
    let mut acc: Vec<f64> = g[..=k_eff.min(cap)].to_vec();
    for parts in 2..=d as usize {
        let len = k_eff.min(parts * cap) + 1;
        let mut next = vec![0.0f64; len];
        for (s, slot) in next.iter_mut().enumerate() {
            let lo = s.saturating_sub(cap);
            let hi = (acc.len() - 1).min(s);
            let mut best = f64::NEG_INFINITY;
            for i in lo..=hi {
                best = best.max(acc[i] + g[s - i]);
            }
            *slot = best;
        }
        acc = next;
    }
    acc[k_eff]
}

/// Sensitivity bound for a monotone lower-triangular Toeplitz right factor
/// (ℓ2 only): upper `sqrt(Dk) ||R||_{1->2}`; lower from brute force when the
/// set is small enough, otherwise from the sampling estimator through the
/// decomposition reduction.
pub fn toeplitz_sens_bound(
    f: &SqrtFactorization,
    set: &SetParams,
    opts: &SensOptions,
) -> Result<SensResult> {
    let upper = toeplitz_upper_bound(f.coeffs(), set)?;
    let fact = Factorization::Sqrt(f.clone());
    let mut notes = Vec::new();
    let (lower, provenance) = match brute_force_sens(&fact, NormOrder::Two, set, &opts.enum_limits)
    {
        Ok(r) => (r.value, "upper: sqrt(Dk) column bound; lower: brute force".to_string()),
        Err(Error::EnumerationLimit(_)) => {
            let d = set.interval_bound();
            let k_inner = (set.l1_bound() / d).max(1).min(set.horizon() as u64);
            let inner = SetParams::new(1, k_inner, set.horizon())?;
            let est =
                empirical_lower_estimate(f, &inner, opts.empirical_trials, opts.seed, opts.threads)?;
            notes.push(("sampled_mean_square".into(), est.mean_square));
            (
                Some(d as f64 * est.max_norm),
                "upper: sqrt(Dk) column bound; lower: sampled (scaled by the interval bound)"
                    .to_string(),
            )
        }
        Err(e) => return Err(e),
    };
    Ok(SensResult { value: None, lower, upper: Some(upper), witness: None, provenance, notes })
}

/// A sensitivity query against a factorization.
#[derive(Debug, Clone)]
pub struct SensQuery<'a> {
    pub factorization: &'a Factorization,
    pub p: NormOrder,
    pub set: SetParams,
    pub method: Method,
}

/// Answers a query, dispatching on factorization and method.
pub fn sensitivity(q: &SensQuery<'_>, opts: &SensOptions) -> Result<SensResult> {
    match (q.factorization, q.method) {
        (f, Method::BruteForce) => brute_force_sens(f, q.p, &q.set, &opts.enum_limits),
        (Factorization::Tree(tree), m) => tree_sens(tree, q.p, &q.set, m, opts),
        (Factorization::Naive(f), Method::ClosedBound) => {
            let v = q.set.interval_bound().min(q.set.l1_bound()) as f64
                * q.p.root(f.horizon() as f64);
            Ok(SensResult {
                value: Some(v),
                lower: Some(v),
                upper: Some(v),
                witness: None,
                provenance: "exact closed form min(D,k) * T^(1/p)".into(),
                notes: Vec::new(),
            })
        }
        (Factorization::Sqrt(f), Method::ClosedBound) => {
            if q.p != NormOrder::Two {
                return Err(Error::InvalidParams(
                    "Toeplitz bounds are stated for the l2 norm".into(),
                ));
            }
            toeplitz_sens_bound(f, &q.set, opts)
        }
        (Factorization::Sqrt(f), Method::Empirical) => {
            if q.p != NormOrder::Two {
                return Err(Error::InvalidParams(
                    "the sampling estimator is an l2 quantity".into(),
                ));
            }
            let est = empirical_lower_estimate(
                f,
                &q.set,
                opts.empirical_trials,
                opts.seed,
                opts.threads,
            )?;
            let upper = toeplitz_upper_bound(f.coeffs(), &q.set)?;
            Ok(SensResult {
                value: None,
                lower: Some(est.max_norm),
                upper: Some(upper),
                witness: None,
                provenance: format!("sampled lower bound over {} trials", est.trials),
                notes: vec![("sampled_mean_square".into(), est.mean_square)],
            })
        }
        (_, Method::ExactDp) => Err(Error::InvalidParams(
            "the dynamic program applies to tree factorizations".into(),
        )),
        (_, Method::Empirical) => Err(Error::InvalidParams(
            "the sampling estimator applies to the square-root factorization".into(),
        )),
    }
}

/// A sensitivity value suitable for calibrating noise: exact when such a
/// form exists, otherwise a certified upper bound, with the choice recorded.
#[derive(Debug, Clone)]
pub struct ResolvedSens {
    pub value: f64,
    pub exact: bool,
    pub provenance: String,
}

/// Resolves the sensitivity used by a mechanism run.
pub fn resolve_sens(
    f: &Factorization,
    p: NormOrder,
    set: &SetParams,
    opts: &SensOptions,
) -> Result<ResolvedSens> {
    let d = set.interval_bound();
    let k = set.l1_bound();
    if let Factorization::Naive(n) = f {
        return Ok(ResolvedSens {
            value: d.min(k) as f64 * p.root(n.horizon() as f64),
            exact: true,
            provenance: "exact closed form min(D,k) * T^(1/p)".into(),
        });
    }
    if k <= d {
        // The interval constraint is vacuous; k copies of the heaviest
        // column are optimal.
        let col = match p {
            NormOrder::Two => f.norms().r_one_to_two,
            NormOrder::One => column_l1_max(f),
        };
        return Ok(ResolvedSens {
            value: k as f64 * col,
            exact: true,
            provenance: "exact: k copies of the heaviest column".into(),
        });
    }
    match f {
        Factorization::Sqrt(s) => match p {
            NormOrder::Two => {
                let upper = toeplitz_upper_bound(s.coeffs(), set)?;
                let exact = d == 1 && k == 1;
                Ok(ResolvedSens {
                    value: upper,
                    exact,
                    provenance: if exact {
                        "exact: the heaviest column".into()
                    } else {
                        "upper bound sqrt(Dk) * ||R||_{1->2}".into()
                    },
                })
            }
            NormOrder::One => Ok(ResolvedSens {
                value: k as f64 * column_l1_max(f),
                exact: false,
                provenance: "upper bound k * max column l1".into(),
            }),
        },
        Factorization::Tree(tree) => {
            let b = tree.branching();
            let h = tree.height();
            let leaves = b.pow(h);
            let k_cap = k.min(leaves);
            match ParityDp::solve(b, h, k_cap, excluded_child(tree), &opts.dp_limits) {
                Ok(dp) => {
                    if d == 1 {
                        let value = p.root(dp.max_value_up_to(k_cap) as f64);
                        // Exact on complete horizons; an embedding upper
                        // bound otherwise.
                        Ok(ResolvedSens {
                            value,
                            exact: tree.is_complete(),
                            provenance: if tree.is_complete() {
                                "exact: parity-counting dynamic program".into()
                            } else {
                                "upper bound: dynamic program on the enclosing complete tree"
                                    .into()
                            },
                        })
                    } else {
                        let g: Vec<f64> = (0..=k_cap)
                            .map(|kk| p.root(dp.max_value_up_to(kk) as f64))
                            .collect();
                        Ok(ResolvedSens {
                            value: split_max(&g, d, k),
                            exact: false,
                            provenance: "upper bound: best split of the l1 budget over \
                                         dynamic-program values"
                                .into(),
                        })
                    }
                }
                Err(Error::BudgetExceeded(_)) => {
                    let reduced = tree.variant() == TreeVariant::SubtractReduced;
                    let (_, upper) =
                        closed_bracket(b, h, tree.horizon() as u64, k, d, p, reduced);
                    let upper = upper.ok_or_else(|| {
                        Error::Infeasible("no certified upper bound available".into())
                    })?;
                    Ok(ResolvedSens {
                        value: upper,
                        exact: false,
                        provenance: "upper bound: closed form (dynamic program over budget)"
                            .into(),
                    })
                }
                Err(e) => Err(e),
            }
        }
        Factorization::Naive(_) => unreachable!("handled above"),
    }
}

fn column_l1_max(f: &Factorization) -> f64 {
    match f {
        Factorization::Naive(n) => n.horizon() as f64,
        Factorization::Sqrt(s) => s.column_l1_max(),
        Factorization::Tree(t) => (t.height() + 1) as f64,
    }
}
