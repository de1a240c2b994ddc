//! `b`-ary tree factorizations.
//!
//! The right factor has one row per tree node; the row is the indicator of
//! the node's contiguous leaf interval, clipped to the horizon. The left
//! factor decodes a prefix per step from a signed set of query nodes:
//!
//! * `Plain` — the prefix `[0, t]` is covered by disjoint nodes, all added.
//!   Greedy decoding over the base-`b` digits of `t+1`; the right-most
//!   child of a parent is never used.
//! * `Subtract` — decoding over balanced base-`b` digits of `t+1` (odd `b`):
//!   per level either up to `(b-1)/2` left-most children are added or up to
//!   `(b-1)/2` right-most children are subtracted; the root is only ever
//!   added and the middle child of a parent is never used.
//! * `SubtractReduced` — as `Subtract`, with the never-used middle-child
//!   rows of the right factor zeroed out, which lowers its sensitivity.
//!
//! For horizons that are not powers of `b`, the tree over `b^h` leaves with
//! `h = ceil(log_b T)` is built and the left factor keeps only the first
//! `T` rows.

use crate::error::{Error, Result};
use crate::noise::{single_draw, NoiseKind};

use super::FactorNorms;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeVariant {
    Plain,
    Subtract,
    SubtractReduced,
}

/// A query node with its decoding sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedNode {
    pub node: usize,
    pub sign: i8,
}

#[derive(Debug, Clone)]
pub struct TreeFactorization {
    branching: u64,
    height: u32,
    horizon: usize,
    variant: TreeVariant,
    /// `powers[l] = b^l` for `l <= height`.
    powers: Vec<u64>,
    /// Node id of `(level, 0)`; levels are counted from the leaves.
    level_offsets: Vec<usize>,
    node_count: usize,
}

impl TreeFactorization {
    pub fn new(branching: u64, variant: TreeVariant, horizon: usize) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::InvalidParams("horizon must be at least 1".into()));
        }
        if branching < 2 {
            return Err(Error::InvalidParams("branching factor must be at least 2".into()));
        }
        if variant != TreeVariant::Plain && (branching < 3 || branching.is_multiple_of(2)) {
            return Err(Error::InvalidParams(
                "subtraction variants require an odd branching factor of at least 3".into(),
            ));
        }
        // Smallest height with b^h >= horizon.
        let mut height: u32 = 0;
        let mut leaves: u64 = 1;
        while leaves < horizon as u64 {
            leaves = leaves
                .checked_mul(branching)
                .ok_or(Error::Overflow("sizing the tree"))?;
            height += 1;
        }
        let mut powers = Vec::with_capacity(height as usize + 1);
        let mut p = 1u64;
        for _ in 0..=height {
            powers.push(p);
            p = p.saturating_mul(branching);
        }
        let mut level_offsets = Vec::with_capacity(height as usize + 1);
        let mut offset = 0usize;
        for level in 0..=height {
            level_offsets.push(offset);
            offset += (leaves / powers[level as usize]) as usize;
        }
        Ok(Self {
            branching,
            height,
            horizon,
            variant,
            powers,
            level_offsets,
            node_count: offset,
        })
    }

    pub fn branching(&self) -> u64 {
        self.branching
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn variant(&self) -> TreeVariant {
        self.variant
    }

    /// Whether the horizon fills the tree exactly (`T = b^h`).
    pub fn is_complete(&self) -> bool {
        self.horizon as u64 == self.powers[self.height as usize]
    }

    /// Rows in the right factor.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn node_id(&self, level: u32, pos: u64) -> usize {
        self.level_offsets[level as usize] + pos as usize
    }

    /// `(level, position)` of a node id.
    pub fn node_level_pos(&self, node: usize) -> (u32, u64) {
        let level = match self.level_offsets.binary_search(&node) {
            Ok(l) => l,
            Err(l) => l - 1,
        };
        (level as u32, (node - self.level_offsets[level]) as u64)
    }

    /// Leaf interval `[lo, hi)` of a node, before clipping to the horizon.
    pub fn node_interval(&self, node: usize) -> (u64, u64) {
        let (level, pos) = self.node_level_pos(node);
        let width = self.powers[level as usize];
        (pos * width, (pos + 1) * width)
    }

    /// Whether the row of the right factor is identically zero. Only the
    /// reduced variant zeroes rows: the middle child of every parent.
    pub fn is_row_zeroed(&self, node: usize) -> bool {
        if self.variant != TreeVariant::SubtractReduced {
            return false;
        }
        let (level, pos) = self.node_level_pos(node);
        level < self.height && pos % self.branching == (self.branching - 1) / 2
    }

    /// Base-`b` digits of `n`, least significant first, `height + 1` slots.
    fn digits(&self, n: u64) -> Vec<u64> {
        let mut out = vec![0u64; self.height as usize + 1];
        let mut n = n;
        let mut i = 0;
        while n > 0 {
            out[i] = n % self.branching;
            n /= self.branching;
            i += 1;
        }
        out
    }

    /// Balanced base-`b` digits of `n` (each in `[-(b-1)/2, (b-1)/2]`, the
    /// top slot possibly 1), least significant first, `height + 1` slots.
    fn balanced_digits(&self, n: u64) -> Vec<i64> {
        let b = self.branching as i64;
        let half = (b - 1) / 2;
        let mut out = vec![0i64; self.height as usize + 1];
        let mut n = n as i64;
        let mut i = 0;
        while n != 0 {
            let mut r = n % b;
            if r > half {
                r -= b;
            }
            out[i] = r;
            n = (n - r) / b;
            i += 1;
        }
        out
    }

    /// The signed query node set decoding the prefix `[0, t]`.
    pub fn query_nodes(&self, t: usize) -> Result<Vec<SignedNode>> {
        if t >= self.horizon {
            return Err(Error::InvalidParams(format!(
                "step {t} is outside the horizon {}",
                self.horizon
            )));
        }
        let n = t as u64 + 1;
        let mut nodes = Vec::new();
        match self.variant {
            TreeVariant::Plain => {
                let digits = self.digits(n);
                let mut covered = 0u64;
                for level in (0..=self.height).rev() {
                    let width = self.powers[level as usize];
                    let d = digits[level as usize];
                    let base = covered / width;
                    for i in 0..d {
                        nodes.push(SignedNode { node: self.node_id(level, base + i), sign: 1 });
                    }
                    covered += d * width;
                }
            }
            TreeVariant::Subtract | TreeVariant::SubtractReduced => {
                let digits = self.balanced_digits(n);
                let mut covered = 0u64;
                for level in (0..=self.height).rev() {
                    let width = self.powers[level as usize];
                    let d = digits[level as usize];
                    let base = covered / width;
                    if d > 0 {
                        for i in 0..d as u64 {
                            nodes.push(SignedNode {
                                node: self.node_id(level, base + i),
                                sign: 1,
                            });
                        }
                        covered += d as u64 * width;
                    } else if d < 0 {
                        for i in 1..=(-d) as u64 {
                            nodes.push(SignedNode {
                                node: self.node_id(level, base - i),
                                sign: -1,
                            });
                        }
                        covered -= (-d) as u64 * width;
                    }
                }
            }
        }
        debug_assert_eq!(
            {
                let mut c = 0i64;
                for sn in &nodes {
                    let (lo, hi) = self.node_interval(sn.node);
                    c += sn.sign as i64 * (hi - lo) as i64;
                }
                c
            },
            n as i64
        );
        Ok(nodes)
    }

    /// Number of query nodes at step `t` (the ℓ1 digit weight of `t+1`).
    pub fn query_size(&self, t: usize) -> usize {
        let n = t as u64 + 1;
        match self.variant {
            TreeVariant::Plain => self.digits(n).iter().sum::<u64>() as usize,
            _ => self.balanced_digits(n).iter().map(|d| d.unsigned_abs()).sum::<u64>() as usize,
        }
    }

    /// ℓ2 norm of row `t` of the left factor.
    pub fn row_l2(&self, t: usize) -> f64 {
        (self.query_size(t) as f64).sqrt()
    }

    /// `R v`: per node, the sum of `v` over its leaf interval clipped to the
    /// horizon; zeroed rows yield 0.
    pub fn right_apply(&self, v: &[i64]) -> Vec<f64> {
        assert_eq!(v.len(), self.horizon, "input length must match the horizon");
        let mut prefix = vec![0i64; self.horizon + 1];
        for (i, &e) in v.iter().enumerate() {
            prefix[i + 1] = prefix[i] + e;
        }
        let clip = |x: u64| (x as usize).min(self.horizon);
        let mut out = vec![0.0f64; self.node_count];
        for node in 0..self.node_count {
            if self.is_row_zeroed(node) {
                continue;
            }
            let (lo, hi) = self.node_interval(node);
            out[node] = (prefix[clip(hi)] - prefix[clip(lo)]) as f64;
        }
        out
    }

    /// Matrix norms. Complete trees use the closed forms; other horizons are
    /// computed exactly by scanning the per-step query sizes.
    pub fn norms(&self) -> FactorNorms {
        let b = self.branching as f64;
        let h = self.height as f64;
        let r_one_to_two = ((self.height + 1) as f64).sqrt();
        if self.is_complete() && self.height >= 1 {
            return match self.variant {
                TreeVariant::Plain => FactorNorms {
                    l_two_to_inf: ((b - 1.0) * h).sqrt(),
                    l_frobenius_over_sqrt_t: ((b - 1.0) * h / 2.0 + b.powi(-(self.height as i32)))
                        .sqrt(),
                    r_one_to_two,
                },
                _ => FactorNorms {
                    l_two_to_inf: (((b - 1.0) * h + 2.0) / 2.0).sqrt(),
                    l_frobenius_over_sqrt_t: (b * (1.0 - 1.0 / (b * b)) * h
                        + 2.0 * (1.0 + b.powi(-(self.height as i32))))
                    .sqrt()
                        / 2.0,
                    r_one_to_two,
                },
            };
        }
        let mut max_q = 0usize;
        let mut sum_q = 0u64;
        for t in 0..self.horizon {
            let q = self.query_size(t);
            max_q = max_q.max(q);
            sum_q += q as u64;
        }
        FactorNorms {
            l_two_to_inf: (max_q as f64).sqrt(),
            l_frobenius_over_sqrt_t: (sum_q as f64 / self.horizon as f64).sqrt(),
            r_one_to_two,
        }
    }

    /// Noise value `(L z)[t]`: signed sum of per-node noise, generated
    /// lazily and reproducibly per node id.
    pub fn noise_at(&self, t: usize, kind: NoiseKind, scale: f64, seed: u64) -> f64 {
        let mut acc = 0.0;
        for sn in self.query_nodes(t).expect("step within horizon") {
            acc += sn.sign as f64 * single_draw(kind, scale, seed, sn.node as u64);
        }
        acc
    }
}
