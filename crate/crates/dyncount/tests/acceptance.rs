//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! through the harness. Expected values come from independent oracles
//! (exhaustive enumeration, direct node counting, Monte-Carlo) — never from
//! the code paths under test.

use dyncount::estimator::{
    diff_stream_countdistinct, diff_stream_degree, diff_stream_triangles, estimate,
    max_degree, max_degree_contribution, max_flippancy, max_triangle_contribution,
    truncate_graph, truncate_items, EdgeUpdate, EstimateConfig, EstimateOutputs, FactorSpec,
    GraphStream, ItemStream, ItemUpdate, Problem, StreamData, TrueValues,
};
use dyncount::factor::{Factorization, SqrtFactorization, TreeFactorization, TreeVariant};
use dyncount::mechanism::{analytic_error, empirical_error, MechanismConfig, PrivacyBudget};
use dyncount::sens::{
    brute_force_sens, empirical_lower_estimate, full_tree_count_bracket, parity_dp_full,
    parity_dp_reduced, reduced_tree_count_bracket_scaled, DpLimits, NormOrder, SensOptions,
};
use dyncount::vectors::{
    decompose, enumerate_set, is_member, EnumLimits, SensitivityVector, SetParams,
};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn limits() -> EnumLimits {
    EnumLimits::default()
}

fn opts() -> SensOptions {
    SensOptions::default()
}

/// Exhaustive ball-placement oracle: for every ball count `k`, the maximum
/// number of odd nodes over all `k`-subsets of leaves, scored directly on
/// the bit representation. `reduced` skips the middle child of every parent
/// below the root.
fn exhaustive_max_odd(b: u64, h: u32, reduced: bool) -> Vec<u64> {
    let leaves = (b as usize).pow(h);
    assert!(leaves <= 27, "mask enumeration caps at 27 leaves");
    let mid = ((b - 1) / 2) as usize;
    // Widths and middle-position masks per level, leaves first.
    let mut widths = Vec::new();
    let mut keep_masks: Vec<u32> = Vec::new();
    let mut w = leaves;
    for level in 0..=h {
        widths.push(w);
        let mut keep = (1u64 << w) - 1;
        if reduced && level < h {
            let mut p = mid;
            while p < w {
                keep &= !(1u64 << p);
                p += b as usize;
            }
        }
        keep_masks.push(keep as u32);
        if level < h {
            w /= b as usize;
        }
    }
    let mut best = vec![0u64; leaves + 1];
    for mask in 0u32..(1u32 << leaves) {
        let k = mask.count_ones() as usize;
        let mut bits = mask;
        let mut count = 0u32;
        for level in 0..=h as usize {
            count += (bits & keep_masks[level]).count_ones();
            if level < h as usize {
                let groups = widths[level] / b as usize;
                let mut next = 0u32;
                for g in 0..groups {
                    let mut x = 0u32;
                    for j in 0..b as usize {
                        x ^= bits >> (g * b as usize + j) & 1;
                    }
                    next |= x << g;
                }
                bits = next;
            }
        }
        if count as u64 > best[k] {
            best[k] = count as u64;
        }
    }
    best
}

#[test]
fn c01_parity_dps_match_exhaustive_ball_placements() {
    let dp_limits = DpLimits::default();
    for b in [2u64, 3] {
        for h in 1..=3u32 {
            let full_oracle = exhaustive_max_odd(b, h, false);
            let reduced_oracle = exhaustive_max_odd(b, h, true);
            for k in 1..=b.pow(h) {
                assert_eq!(
                    parity_dp_full(b, h, k, &dp_limits).unwrap(),
                    full_oracle[k as usize],
                    "full b={b} h={h} k={k}"
                );
                assert_eq!(
                    parity_dp_reduced(b, h, k, &dp_limits).unwrap(),
                    reduced_oracle[k as usize],
                    "reduced b={b} h={h} k={k}"
                );
            }
        }
    }
    eprintln!("criterion 1 PASS: dynamic programs equal exhaustive placement maxima (b in {{2,3}}, h <= 3)");
}

#[test]
fn c02_tree_count_brackets_hold() {
    let dp_limits = DpLimits::default();
    let mut checked = 0u64;
    for b in [2u64, 3, 5] {
        for h in 1..=5u32 {
            let k_max = 200u64.min(b.pow(h));
            let full = dyncount::sens::ParityDp::solve(b, h, k_max, None, &dp_limits).unwrap();
            let reduced =
                dyncount::sens::ParityDp::solve(b, h, k_max, Some((b - 1) / 2), &dp_limits)
                    .unwrap();
            for k in 1..=k_max {
                let f = full.value(k);
                let (lo, hi) = full_tree_count_bracket(b, h, k);
                assert!(lo <= f && f <= hi, "full bracket b={b} h={h} k={k}: {lo} {f} {hi}");

                let fr = reduced.value(k);
                let (lo_s, hi_s) = reduced_tree_count_bracket_scaled(b, h, k);
                assert!(
                    lo_s <= b * fr && b * fr <= hi_s,
                    "reduced bracket b={b} h={h} k={k}: {lo_s} {} {hi_s}",
                    b * fr
                );
                // The full upper bound is monotone in k.
                if k > 1 {
                    let (_, prev_hi) = full_tree_count_bracket(b, h, k - 1);
                    assert!(hi >= prev_hi);
                }
                checked += 1;
            }
        }
    }
    eprintln!("criterion 2 PASS: count brackets hold at {checked} grid points, zero violations");
}

#[test]
fn c03_toeplitz_bound_soundness() {
    // Interval bound 1: horizons up to 18, l1 budgets up to 4.
    for t in 1..=18usize {
        let f = Factorization::sqrt(t).unwrap();
        let col = match &f {
            Factorization::Sqrt(s) => s.gram_diagonal()[0].sqrt(),
            _ => unreachable!(),
        };
        for k in 1..=4u64.min(t as u64) {
            let set = SetParams::new(1, k, t).unwrap();
            let brute = brute_force_sens(&f, NormOrder::Two, &set, &limits())
                .unwrap()
                .value
                .unwrap();
            let bound = (k as f64).sqrt() * col;
            assert!(brute <= bound + 1e-9, "t={t} k={k}: {brute} > {bound}");
        }
    }
    // General interval bounds: horizons up to 7, D up to 2, k up to 4.
    for t in 1..=7usize {
        let f = Factorization::sqrt(t).unwrap();
        let col = match &f {
            Factorization::Sqrt(s) => s.gram_diagonal()[0].sqrt(),
            _ => unreachable!(),
        };
        for d in 1..=2u64 {
            for k in 1..=4u64 {
                let set = SetParams::new(d, k, t).unwrap();
                let brute = brute_force_sens(&f, NormOrder::Two, &set, &limits())
                    .unwrap()
                    .value
                    .unwrap();
                let bound = ((d * k) as f64).sqrt() * col;
                assert!(brute <= bound + 1e-9, "t={t} d={d} k={k}: {brute} > {bound}");
            }
        }
    }
    eprintln!("criterion 3 PASS: brute-force sensitivities never exceed sqrt(Dk) column bounds");
}

#[test]
fn c04_gram_properties() {
    // Symmetry and both monotonicities, exhaustively at T = 64.
    let t = 64usize;
    let f = SqrtFactorization::new(t).unwrap();
    let mut table = vec![vec![0.0f64; t]; t];
    for i in 0..t {
        for j in 0..t {
            table[i][j] = f.gram_entry(i, j);
        }
    }
    for i in 0..t {
        for j in 0..t {
            assert_eq!(table[i][j].to_bits(), table[j][i].to_bits(), "symmetry {i},{j}");
        }
    }
    for i in 0..t {
        for j in i..t {
            for m in 0..(t - j) {
                assert!(
                    table[i][j] >= table[i][j + m] - 1e-12,
                    "row monotonicity {i},{j},{m}"
                );
            }
            for m in 0..(t - j) {
                assert!(
                    table[i][j] >= table[i + m][j + m] - 1e-12,
                    "diagonal-shift monotonicity {i},{j},{m}"
                );
            }
        }
    }
    // Diagonal bracket 1 + ln(T-i)/pi <= c(i,i) <= 1.067 + ln(T-i)/pi.
    for t in [16usize, 256, 4096] {
        let f = SqrtFactorization::new(t).unwrap();
        let diag = f.gram_diagonal();
        for i in 0..t - 1 {
            let log_term = ((t - i) as f64).ln() / std::f64::consts::PI;
            assert!(diag[i] >= 1.0 + log_term - 1e-12, "lower bracket t={t} i={i}");
            assert!(diag[i] <= 1.067 + log_term + 1e-12, "upper bracket t={t} i={i}");
        }
    }
    eprintln!("criterion 4 PASS: Gram symmetry, monotonicities, and diagonal brackets hold");
}

#[test]
fn c05_closed_form_norms() {
    // Complete horizons: integer identities between direct node counts and
    // the closed forms, then the norms() output to machine precision.
    for b in [2u64, 3, 5, 7] {
        for h in 1..=5u32 {
            let t = b.pow(h) as usize;
            let tree = TreeFactorization::new(b, TreeVariant::Plain, t).unwrap();
            let max_q = (0..t).map(|s| tree.query_size(s) as u64).max().unwrap();
            let sum_q: u64 = (0..t).map(|s| tree.query_size(s) as u64).sum();
            assert_eq!(max_q, (b - 1) * h as u64, "plain max b={b} h={h}");
            assert_eq!(2 * sum_q, (b - 1) * h as u64 * t as u64 + 2, "plain sum b={b} h={h}");
            let n = tree.norms();
            assert!((n.l_two_to_inf.powi(2) - max_q as f64).abs() < 1e-9);
            assert!((n.l_frobenius_over_sqrt_t.powi(2) - sum_q as f64 / t as f64).abs() < 1e-9);
        }
    }
    for b in [3u64, 5, 7] {
        for h in 1..=5u32 {
            let t = b.pow(h) as usize;
            let tree = TreeFactorization::new(b, TreeVariant::Subtract, t).unwrap();
            let max_q = (0..t).map(|s| tree.query_size(s) as u64).max().unwrap();
            let sum_q: u64 = (0..t).map(|s| tree.query_size(s) as u64).sum();
            assert_eq!(max_q, 1 + h as u64 * (b - 1) / 2, "subtract max b={b} h={h}");
            assert_eq!(
                4 * sum_q,
                (b * b - 1) * h as u64 * b.pow(h - 1) + 2 * b.pow(h) + 2,
                "subtract sum b={b} h={h}"
            );
            let n = tree.norms();
            assert!((n.l_two_to_inf.powi(2) - max_q as f64).abs() < 1e-9);
            assert!((n.l_frobenius_over_sqrt_t.powi(2) - sum_q as f64 / t as f64).abs() < 1e-9);
        }
    }
    // Non-power horizons: computed norms lie within the general-horizon
    // upper brackets for b = 3.
    for t in [10usize, 50, 200] {
        let tree = TreeFactorization::new(3, TreeVariant::Subtract, t).unwrap();
        let h = tree.height() as f64;
        let n = tree.norms();
        let max_upper = ((2.0 * h + 2.0) / 2.0).sqrt();
        let mean_upper =
            (3.0 * (1.0 - 1.0 / 9.0) * h + 2.0 * (1.0 + 9.0 + 3.0f64.powf(-h))).sqrt() / 2.0;
        assert!(n.l_two_to_inf <= max_upper + 1e-12, "T={t}");
        assert!(n.l_frobenius_over_sqrt_t <= mean_upper + 1e-12, "T={t}");
    }
    eprintln!("criterion 5 PASS: closed-form norms reproduced by direct node counts");
}

#[test]
fn c06_leading_constants() {
    use dyncount::comparison::*;
    let (b, v) = optimal_odd_branching(zcdp_tree_max_constant);
    assert_eq!(b, 5);
    assert!((v - 0.609).abs() <= 0.001, "zCDP MaxSE constant {v}");
    let (b, v) = optimal_odd_branching(zcdp_tree_mean_constant);
    assert_eq!(b, 7);
    assert!((v - 0.466).abs() <= 0.001, "zCDP MeanSE constant {v}");
    let (b, v) = optimal_odd_branching(pure_tree_max_constant);
    assert_eq!(b, 17);
    assert!((v - 0.342).abs() <= 0.001, "pure-DP MaxSE constant {v}");
    let (b, v) = optimal_odd_branching(pure_tree_mean_constant);
    assert_eq!(b, 19);
    assert!((v - 0.249).abs() <= 0.001, "pure-DP MeanSE constant {v}");
    eprintln!("criterion 6 PASS: leading constants minimize at b=5/7 (zCDP) and b=17/19 (pure)");
}

#[test]
fn c07_mechanism_error_formulas() {
    let trials = 100_000;
    let budget = PrivacyBudget::zcdp(0.5).unwrap();
    let cases: Vec<(Factorization, SetParams)> = vec![
        (Factorization::naive(64).unwrap(), SetParams::new(1, 1, 64).unwrap()),
        (
            Factorization::tree(3, TreeVariant::Subtract, 27).unwrap(),
            SetParams::new(1, 1, 27).unwrap(),
        ),
        (Factorization::sqrt(64).unwrap(), SetParams::new(1, 1, 64).unwrap()),
    ];
    for (f, set) in cases {
        let config = MechanismConfig::new(budget, set, 0xACCE);
        let emp = empirical_error(&f, &config, trials, None, &opts()).unwrap();
        let ana = analytic_error(&f, &budget, &set, &opts()).unwrap();
        let max_dev = (emp.max_se / ana.max_se - 1.0).abs();
        let mean_dev = (emp.mean_se / ana.mean_se - 1.0).abs();
        assert!(max_dev < 0.02, "{}: MaxSE deviation {max_dev}", f.label());
        assert!(mean_dev < 0.02, "{}: MeanSE deviation {mean_dev}", f.label());
        eprintln!(
            "criterion 7: {} MaxSE {:.4} vs {:.4} (dev {:.3}%), MeanSE {:.4} vs {:.4} (dev {:.3}%)",
            f.label(),
            emp.max_se,
            ana.max_se,
            100.0 * max_dev,
            emp.mean_se,
            ana.mean_se,
            100.0 * mean_dev
        );
    }
    eprintln!("criterion 7 PASS: empirical errors within 2% of the analytic formulas at 1e5 trials");
}

#[test]
fn c08_reduction_sandwich() {
    for t in 1..=6usize {
        let factorizations = vec![
            Factorization::naive(t).unwrap(),
            Factorization::sqrt(t).unwrap(),
            Factorization::tree(2, TreeVariant::Plain, t).unwrap(),
        ];
        for f in &factorizations {
            // Alternating-set sensitivities for every l1 budget.
            let mut s1 = [0.0f64; 7];
            for (j, slot) in s1.iter_mut().enumerate() {
                let kj = (j as u64).min(t as u64);
                *slot = if kj == 0 {
                    0.0
                } else {
                    let set = SetParams::new(1, kj, t).unwrap();
                    brute_force_sens(f, NormOrder::Two, &set, &limits())
                        .unwrap()
                        .value
                        .unwrap()
                };
            }
            for d in 1..=3u64 {
                for k in 1..=6u64 {
                    let set = SetParams::new(d, k, t).unwrap();
                    let sens_dk = brute_force_sens(f, NormOrder::Two, &set, &limits())
                        .unwrap()
                        .value
                        .unwrap();
                    let lower = d as f64 * s1[(k / d) as usize];
                    assert!(
                        lower <= sens_dk + 1e-9,
                        "{} t={t} d={d} k={k}: lower {lower} > {sens_dk}",
                        f.label()
                    );
                    // Best split of the l1 budget into d parts.
                    let mut upper = 0.0f64;
                    let parts = d as usize;
                    let mut split = vec![0u64; parts];
                    loop {
                        let used: u64 = split[..parts - 1].iter().sum();
                        if used <= k {
                            split[parts - 1] = k - used;
                            let total: f64 =
                                split.iter().map(|&ki| s1[ki as usize]).sum();
                            upper = upper.max(total);
                        }
                        // Odometer over the first parts-1 coordinates.
                        let mut carry = true;
                        for slot in split[..parts - 1].iter_mut() {
                            if *slot < k {
                                *slot += 1;
                                carry = false;
                                break;
                            }
                            *slot = 0;
                        }
                        if carry {
                            break;
                        }
                    }
                    assert!(
                        sens_dk <= upper + 1e-9,
                        "{} t={t} d={d} k={k}: {sens_dk} > split upper {upper}",
                        f.label()
                    );
                }
            }
        }
        // Decomposition invariants on every enumerated member.
        for d in 1..=3u64 {
            for k in 1..=6u64 {
                let p = SetParams::new(d, k, t).unwrap();
                for v in enumerate_set(t, d, k).unwrap() {
                    let dec = decompose(&v, &p).unwrap();
                    assert!(dec.parts.len() as u64 <= d);
                    let mut sum = vec![0i64; t];
                    for part in &dec.parts {
                        assert!(part.is_alternating().unwrap());
                        for (s, e) in sum.iter_mut().zip(part.entries()) {
                            *s += e;
                        }
                    }
                    assert_eq!(sum, v.entries());
                    assert_eq!(
                        dec.part_weights.iter().sum::<u64>(),
                        v.l1_norm().unwrap()
                    );
                }
            }
        }
    }
    eprintln!("criterion 8 PASS: reduction sandwich and decomposition invariants hold exhaustively");
}

// Random stream generators for the constructive sensitivity-set checks.

fn random_item_stream(rng: &mut ChaCha8Rng, t: usize) -> ItemStream {
    let universe = ["u", "a", "b", "c"];
    let mut steps = Vec::with_capacity(t);
    for _ in 0..t {
        let mut batch = Vec::new();
        for _ in 0..(rng.next_u64() % 4) {
            let item = universe[(rng.next_u64() % universe.len() as u64) as usize];
            let up = if rng.next_u64().is_multiple_of(2) {
                ItemUpdate::Insert(item.into())
            } else {
                ItemUpdate::Delete(item.into())
            };
            batch.push(up);
        }
        steps.push(batch);
    }
    // Guarantee activity for the distinguished item.
    let at = (rng.next_u64() % t as u64) as usize;
    steps[at].push(ItemUpdate::Insert("u".into()));
    ItemStream::new(steps).unwrap()
}

fn random_graph_stream(
    rng: &mut ChaCha8Rng,
    n: usize,
    t: usize,
    degree_cap: Option<u64>,
) -> GraphStream {
    use std::collections::BTreeSet;
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut steps: Vec<Vec<EdgeUpdate>> = Vec::with_capacity(t);
    for step in 0..t {
        let mut batch = Vec::new();
        if step == 0 {
            batch.push(EdgeUpdate::Insert(0, 1));
            adj[0].insert(1);
            adj[1].insert(0);
        }
        for _ in 0..(rng.next_u64() % 3) {
            let a = (rng.next_u64() % n as u64) as usize;
            let b = (rng.next_u64() % n as u64) as usize;
            if a == b {
                continue;
            }
            // Keep the injected first insert of (0, 1) effective at the
            // step-0 boundary.
            if step == 0 && a.min(b) == 0 && a.max(b) == 1 {
                continue;
            }
            if rng.next_u64().is_multiple_of(2) {
                if let Some(cap) = degree_cap {
                    let effective = !adj[a].contains(&b);
                    if effective
                        && (adj[a].len() as u64 >= cap || adj[b].len() as u64 >= cap)
                    {
                        continue;
                    }
                }
                adj[a].insert(b);
                adj[b].insert(a);
                batch.push(EdgeUpdate::Insert(a, b));
            } else {
                adj[a].remove(&b);
                adj[b].remove(&a);
                batch.push(EdgeUpdate::Delete(a, b));
            }
        }
        steps.push(batch);
    }
    GraphStream::new(n, steps).unwrap()
}

#[test]
fn c09_sensitivity_set_theorems_constructively() {
    let trials = 1000;
    // Distinct-element streams: alternating, flippancy-sparse deltas.
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    for _ in 0..trials {
        let t = 2 + (rng.next_u64() % 49) as usize;
        let x = random_item_stream(&mut rng, t);
        let y = x.without_item("u");
        let dx = diff_stream_countdistinct(&x);
        let dy = diff_stream_countdistinct(&y);
        let delta: Vec<i64> = dx.iter().zip(&dy).map(|(a, b)| a - b).collect();
        let v = SensitivityVector::new(delta).unwrap();
        assert!(v.is_alternating().unwrap());
        let k = max_flippancy(&x);
        assert!(v.l1_norm().unwrap() <= k);
        if k >= 1 {
            let set = SetParams::new(1, k, t).unwrap();
            assert!(is_member(&v, &set).unwrap());
        }
    }
    // Degree streams: only the two endpoints change, alternating and sparse.
    let mut rng = ChaCha8Rng::seed_from_u64(902);
    for _ in 0..trials {
        let n = 3 + (rng.next_u64() % 8) as usize;
        let t = 2 + (rng.next_u64() % 49) as usize;
        let x = random_graph_stream(&mut rng, n, t, None);
        let y = x.without_edge(0, 1);
        let dx = diff_stream_degree(&x);
        let dy = diff_stream_degree(&y);
        let k = max_degree_contribution(&x);
        for node in 0..n {
            let delta: Vec<i64> =
                dx[node].iter().zip(&dy[node]).map(|(a, b)| a - b).collect();
            let v = SensitivityVector::new(delta).unwrap();
            if node >= 2 {
                assert_eq!(v.l1_norm().unwrap(), 0, "only the endpoints may change");
            } else {
                assert!(v.is_alternating().unwrap());
                assert!(v.l1_norm().unwrap() >= 1, "injected update must register");
                assert!(v.l1_norm().unwrap() <= k);
                let set = SetParams::new(1, k, t).unwrap();
                assert!(is_member(&v, &set).unwrap());
            }
        }
        // The two endpoint restrictions are identical streams.
        let d0: Vec<i64> = dx[0].iter().zip(&dy[0]).map(|(a, b)| a - b).collect();
        let d1: Vec<i64> = dx[1].iter().zip(&dy[1]).map(|(a, b)| a - b).collect();
        assert_eq!(d0, d1);
    }
    // Triangle streams under a degree bound: interval sums within the bound,
    // l1 within the triangle contribution.
    let mut rng = ChaCha8Rng::seed_from_u64(903);
    for _ in 0..trials {
        let n = 3 + (rng.next_u64() % 8) as usize;
        let t = 2 + (rng.next_u64() % 49) as usize;
        let cap = 2 + rng.next_u64() % 3;
        let x = random_graph_stream(&mut rng, n, t, Some(cap));
        let y = x.without_edge(0, 1);
        assert!(max_degree(&x) <= cap);
        assert!(max_degree(&y) <= cap);
        let dx = diff_stream_triangles(&x);
        let dy = diff_stream_triangles(&y);
        let delta: Vec<i64> = dx.iter().zip(&dy).map(|(a, b)| a - b).collect();
        let v = SensitivityVector::new(delta).unwrap();
        assert!(v.interval_sum_bound().unwrap() <= cap);
        let k = max_triangle_contribution(&x);
        assert!(v.l1_norm().unwrap() <= k);
        if k >= 1 {
            let set = SetParams::new(cap, k, t).unwrap();
            assert!(is_member(&v, &set).unwrap());
        }
    }
    eprintln!("criterion 9 PASS: 1000 random neighboring pairs per problem satisfy the set memberships");
}

#[test]
fn c10_empirical_square_root_lower_bound() {
    let t = 1 << 14;
    let k = 16u64;
    let f = SqrtFactorization::new(t).unwrap();
    let set = SetParams::new(1, k, t).unwrap();
    let est = empirical_lower_estimate(&f, &set, 10_000, 0xE57, None).unwrap();
    let target = 0.75 * (k as f64 / std::f64::consts::PI) * (t as f64 / k as f64).ln();
    assert!(
        est.mean_square >= target,
        "mean square {} below the one-sided target {target}",
        est.mean_square
    );
    eprintln!(
        "criterion 10 PASS: sampled mean square {:.3} >= 0.75 (k/pi) ln(T/k) = {:.3}",
        est.mean_square, target
    );
}

#[test]
fn c11_end_to_end_exactness_and_truncation() {
    let opts = opts();
    let specs = [
        FactorSpec::Naive,
        FactorSpec::Sqrt,
        FactorSpec::Tree { branching: 3, variant: TreeVariant::Subtract },
        FactorSpec::Tree { branching: 2, variant: TreeVariant::Plain },
    ];
    let zero_noise = |spec: FactorSpec, k: u64, d: Option<u64>| EstimateConfig {
        factorization: spec,
        budget: PrivacyBudget::zcdp(0.5).unwrap(),
        l1_bound: k,
        interval_bound: d,
        seed: 11,
        scale_override: Some(0.0),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(1101);
    for trial in 0..40 {
        let t = 2 + (rng.next_u64() % 199) as usize;
        let spec = specs[trial % specs.len()];

        // Distinct elements.
        let s = random_item_stream(&mut rng, t);
        let k = max_flippancy(&s).max(1);
        let run = estimate(
            Problem::CountDistinct,
            &StreamData::Items(s.clone()),
            &zero_noise(spec, k, None),
            &opts,
        )
        .unwrap();
        assert!(run.truncation_log.is_empty(), "compliant stream must not truncate");
        match (&run.outputs, &run.truth) {
            (EstimateOutputs::Scalar(out), TrueValues::Scalar(truth)) => {
                for (o, w) in out.iter().zip(truth) {
                    assert_eq!(*o, *w as f64);
                }
            }
            _ => panic!(),
        }
        // Truncation is idempotent and fixes compliant streams.
        let (once, _) = truncate_items(&s, k);
        assert_eq!(once, s);
        let tight = max_flippancy(&s).saturating_sub(1).max(1);
        let (cut, _) = truncate_items(&s, tight);
        let (cut2, log2) = truncate_items(&cut, tight);
        assert_eq!(cut, cut2);
        assert!(log2.is_empty());

        // Degree histograms.
        let n = 3 + (rng.next_u64() % 10) as usize;
        let g = random_graph_stream(&mut rng, n, t, None);
        let k = max_degree_contribution(&g).max(1);
        let run = estimate(
            Problem::DegreeCount,
            &StreamData::Graph(g.clone()),
            &zero_noise(spec, k, None),
            &opts,
        )
        .unwrap();
        match (&run.outputs, &run.truth) {
            (EstimateOutputs::PerNode(out), TrueValues::PerNode(truth)) => {
                for (o_node, w_node) in out.iter().zip(truth) {
                    for (o, w) in o_node.iter().zip(w_node) {
                        assert_eq!(*o, *w as f64);
                    }
                }
            }
            _ => panic!(),
        }
        let (once, _) = truncate_graph(&g, k);
        assert_eq!(once, g);
        let tight = max_degree_contribution(&g).saturating_sub(1).max(1);
        let (cut, _) = truncate_graph(&g, tight);
        let (cut2, log2) = truncate_graph(&cut, tight);
        assert_eq!(cut, cut2);
        assert!(log2.is_empty());

        // Triangle counts under a degree bound.
        let g = random_graph_stream(&mut rng, n.min(12), t, Some(4));
        let d = max_degree(&g).max(1);
        let k = max_triangle_contribution(&g).max(1);
        let run = estimate(
            Problem::TriangleCount,
            &StreamData::Graph(g),
            &zero_noise(spec, k, Some(d)),
            &opts,
        )
        .unwrap();
        match (&run.outputs, &run.truth) {
            (EstimateOutputs::Scalar(out), TrueValues::Scalar(truth)) => {
                for (o, w) in out.iter().zip(truth) {
                    assert_eq!(*o, *w as f64);
                }
            }
            _ => panic!(),
        }
    }
    eprintln!("criterion 11 PASS: zero-noise estimators reproduce exact statistics; truncation is idempotent");
}
