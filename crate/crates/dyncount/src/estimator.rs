//! Private cardinality estimation over fully dynamic streams.
//!
//! Distinct-element, degree-histogram and triangle-count estimation all
//! reduce to continual counting on a *difference stream*: the per-step
//! increments of the target statistic. The prefix sums of the difference
//! stream reproduce the statistic exactly, so a private continual counter
//! run over it yields private estimates at every step.
//!
//! Bounded per-key contribution (flippancy for items, update counts for
//! edges, absolute triangle changes per edge) keeps the difference stream's
//! sensitivity vectors inside the structured sets of [`crate::vectors`],
//! which is what makes the factorization mechanisms accurate here. An
//! online truncation pass enforces those bounds on arbitrary inputs for
//! items and edges; no truncation is defined for triangle contribution, so
//! triangle estimation is private only against degree- and
//! contribution-bounded neighbors.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::factor::{Factorization, TreeVariant};
use crate::mechanism::{run_stream, MechanismConfig, MechanismRun, PrivacyBudget};
use crate::noise::derive_seed;
use crate::sens::SensOptions;
use crate::vectors::SetParams;

/// One update of an item stream. Items are arbitrary string keys; presence
/// follows net counts (inserted more often than deleted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ItemUpdate {
    Insert(String),
    Delete(String),
    Noop,
}

/// A fully dynamic item stream: one batch of updates per time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemStream {
    pub steps: Vec<Vec<ItemUpdate>>,
}

impl ItemStream {
    pub fn new(steps: Vec<Vec<ItemUpdate>>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidParams("a stream needs at least one step".into()));
        }
        Ok(Self { steps })
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// The stream with every update of `item` replaced by a no-op: the
    /// canonical neighboring stream for item-level privacy.
    pub fn without_item(&self, item: &str) -> ItemStream {
        let steps = self
            .steps
            .iter()
            .map(|batch| {
                batch
                    .iter()
                    .map(|u| match u {
                        ItemUpdate::Insert(i) | ItemUpdate::Delete(i) if i == item => {
                            ItemUpdate::Noop
                        }
                        other => other.clone(),
                    })
                    .collect()
            })
            .collect();
        ItemStream { steps }
    }
}

/// One update of a graph stream over nodes `0..n`. The graph is undirected
/// and simple: inserts of present edges and deletes of absent edges do not
/// change the graph (they still count toward degree contribution).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeUpdate {
    Insert(usize, usize),
    Delete(usize, usize),
    Noop,
}

impl EdgeUpdate {
    fn endpoints(&self) -> Option<(usize, usize)> {
        match *self {
            EdgeUpdate::Insert(a, b) | EdgeUpdate::Delete(a, b) => {
                Some((a.min(b), a.max(b)))
            }
            EdgeUpdate::Noop => None,
        }
    }
}

/// A fully dynamic graph stream on a fixed node set, starting empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphStream {
    nodes: usize,
    pub steps: Vec<Vec<EdgeUpdate>>,
}

impl GraphStream {
    pub fn new(nodes: usize, steps: Vec<Vec<EdgeUpdate>>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidParams("a stream needs at least one step".into()));
        }
        if nodes == 0 {
            return Err(Error::InvalidParams("the node set must be non-empty".into()));
        }
        for batch in &steps {
            for u in batch {
                if let Some((a, b)) = u.endpoints() {
                    if a == b {
                        return Err(Error::SelfLoop(a));
                    }
                    if b >= nodes {
                        return Err(Error::UnknownNode(b, nodes));
                    }
                }
            }
        }
        Ok(Self { nodes, steps })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// The stream with every update of edge `(a, b)` replaced by a no-op:
    /// the canonical neighboring stream for edge-level privacy.
    pub fn without_edge(&self, a: usize, b: usize) -> GraphStream {
        let key = (a.min(b), a.max(b));
        let steps = self
            .steps
            .iter()
            .map(|batch| {
                batch
                    .iter()
                    .map(|u| match u.endpoints() {
                        Some(e) if e == key => EdgeUpdate::Noop,
                        _ => *u,
                    })
                    .collect()
            })
            .collect();
        GraphStream { nodes: self.nodes, steps }
    }
}

/// Either stream kind; what the file harness parses into.
#[derive(Debug, Clone)]
pub enum StreamData {
    Items(ItemStream),
    Graph(GraphStream),
}

/// Per-step increments of the distinct count. Prefix sums reproduce the
/// distinct count exactly.
pub fn diff_stream_countdistinct(s: &ItemStream) -> Vec<i64> {
    let mut net: BTreeMap<&str, i64> = BTreeMap::new();
    let mut present: i64 = 0;
    let mut prev: i64 = 0;
    let mut diffs = Vec::with_capacity(s.horizon());
    for batch in &s.steps {
        for u in batch {
            let (key, delta) = match u {
                ItemUpdate::Insert(i) => (i.as_str(), 1),
                ItemUpdate::Delete(i) => (i.as_str(), -1),
                ItemUpdate::Noop => continue,
            };
            let e = net.entry(key).or_insert(0);
            let was = *e > 0;
            *e += delta;
            let is = *e > 0;
            present += is as i64 - was as i64;
        }
        diffs.push(present - prev);
        prev = present;
    }
    diffs
}

/// Per-node, per-step degree increments, node-major.
pub fn diff_stream_degree(s: &GraphStream) -> Vec<Vec<i64>> {
    let n = s.nodes();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut prev_deg: Vec<i64> = vec![0; n];
    let mut diffs: Vec<Vec<i64>> = vec![Vec::with_capacity(s.horizon()); n];
    for batch in &s.steps {
        for u in batch {
            apply_edge(&mut adj, u);
        }
        for i in 0..n {
            let deg = adj[i].len() as i64;
            diffs[i].push(deg - prev_deg[i]);
            prev_deg[i] = deg;
        }
    }
    diffs
}

/// Per-step increments of the triangle count, maintained incrementally via
/// common-neighbor intersections on effective edge changes.
pub fn diff_stream_triangles(s: &GraphStream) -> Vec<i64> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); s.nodes()];
    let mut count: i64 = 0;
    let mut prev: i64 = 0;
    let mut diffs = Vec::with_capacity(s.horizon());
    for batch in &s.steps {
        for u in batch {
            match *u {
                EdgeUpdate::Insert(a, b) => {
                    if !adj[a].contains(&b) {
                        count += common_neighbors(&adj, a, b);
                        adj[a].insert(b);
                        adj[b].insert(a);
                    }
                }
                EdgeUpdate::Delete(a, b) => {
                    if adj[a].contains(&b) {
                        adj[a].remove(&b);
                        adj[b].remove(&a);
                        count -= common_neighbors(&adj, a, b);
                    }
                }
                EdgeUpdate::Noop => {}
            }
        }
        diffs.push(count - prev);
        prev = count;
    }
    diffs
}

fn apply_edge(adj: &mut [BTreeSet<usize>], u: &EdgeUpdate) {
    match *u {
        EdgeUpdate::Insert(a, b) => {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        EdgeUpdate::Delete(a, b) => {
            adj[a].remove(&b);
            adj[b].remove(&a);
        }
        EdgeUpdate::Noop => {}
    }
}

fn common_neighbors(adj: &[BTreeSet<usize>], a: usize, b: usize) -> i64 {
    let (small, large) = if adj[a].len() <= adj[b].len() { (a, b) } else { (b, a) };
    adj[small].iter().filter(|v| adj[large].contains(v)).count() as i64
}

/// Which per-key contribution a tracker or truncation pass bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContributionMode {
    /// Presence toggles of an item, at step granularity.
    Flippancy,
    /// Updates applied to a single edge, redundant ones included.
    DegreeContribution,
    /// Total absolute change of the number of triangles containing an edge.
    TriangleContribution,
}

/// Maximum flippancy: the largest number of present/absent transitions of
/// any single item, measured at step boundaries.
pub fn max_flippancy(s: &ItemStream) -> u64 {
    let mut net: BTreeMap<&str, i64> = BTreeMap::new();
    let mut committed: BTreeMap<&str, bool> = BTreeMap::new();
    let mut flips: BTreeMap<&str, u64> = BTreeMap::new();
    for batch in &s.steps {
        for u in batch {
            let (key, delta) = match u {
                ItemUpdate::Insert(i) => (i.as_str(), 1),
                ItemUpdate::Delete(i) => (i.as_str(), -1),
                ItemUpdate::Noop => continue,
            };
            *net.entry(key).or_insert(0) += delta;
        }
        for (key, n) in &net {
            let live = *n > 0;
            let c = committed.entry(key).or_insert(false);
            if live != *c {
                *flips.entry(key).or_insert(0) += 1;
                *c = live;
            }
        }
    }
    flips.values().copied().max().unwrap_or(0)
}

/// Maximum degree contribution: the largest number of updates any single
/// edge receives.
pub fn max_degree_contribution(s: &GraphStream) -> u64 {
    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for batch in &s.steps {
        for u in batch {
            if let Some(e) = u.endpoints() {
                *counts.entry(e).or_insert(0) += 1;
            }
        }
    }
    counts.values().copied().max().unwrap_or(0)
}

/// Maximum triangle contribution: for each edge, the sum over steps of the
/// absolute change in the number of triangles containing it; maximized over
/// edges.
pub fn max_triangle_contribution(s: &GraphStream) -> u64 {
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for batch in &s.steps {
        for u in batch {
            if let Some(e) = u.endpoints() {
                pairs.insert(e);
            }
        }
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); s.nodes()];
    let mut prev: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    let mut contrib: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for batch in &s.steps {
        for u in batch {
            apply_edge(&mut adj, u);
        }
        for &(a, b) in &pairs {
            let tri = if adj[a].contains(&b) { common_neighbors(&adj, a, b) } else { 0 };
            let p = prev.entry((a, b)).or_insert(0);
            *contrib.entry((a, b)).or_insert(0) += tri.abs_diff(*p);
            *p = tri;
        }
    }
    contrib.values().copied().max().unwrap_or(0)
}

/// A suppressed update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncationEvent {
    pub step: usize,
    pub index: usize,
    pub key: String,
}

/// Online truncation to flippancy at most `k`.
///
/// Flippancy is committed at step boundaries, so the pass works one batch
/// at a time: updates apply tentatively, and at the boundary any item whose
/// presence change would push its flippancy past `k` has this step's
/// updates suppressed, restoring its start-of-step state (which equals its
/// committed state). With one update per step this suppresses exactly the
/// toggling update itself. State and counters track the truncated output
/// stream, so the bound holds unconditionally, compliant inputs pass
/// through unchanged, and the pass is idempotent.
pub fn truncate_items(s: &ItemStream, k: u64) -> (ItemStream, Vec<TruncationEvent>) {
    let mut net: BTreeMap<String, i64> = BTreeMap::new();
    let mut committed: BTreeMap<String, bool> = BTreeMap::new();
    let mut flips: BTreeMap<String, u64> = BTreeMap::new();
    let mut log = Vec::new();
    let mut steps = Vec::with_capacity(s.horizon());
    for (t, batch) in s.steps.iter().enumerate() {
        // Tentative application of the whole batch.
        let mut start_net: BTreeMap<String, i64> = BTreeMap::new();
        for u in batch {
            let key = match u {
                ItemUpdate::Insert(i) | ItemUpdate::Delete(i) => i,
                ItemUpdate::Noop => continue,
            };
            let cur = *net.get(key).unwrap_or(&0);
            start_net.entry(key.clone()).or_insert(cur);
            let delta = if matches!(u, ItemUpdate::Insert(_)) { 1 } else { -1 };
            net.insert(key.clone(), cur + delta);
        }
        // Boundary: roll back items whose flip budget is spent.
        let mut rolled_back: BTreeSet<String> = BTreeSet::new();
        for (key, start) in &start_net {
            let live = *net.get(key).unwrap_or(&0) > 0;
            let comm = *committed.get(key).unwrap_or(&false);
            if live != comm && *flips.get(key).unwrap_or(&0) + 1 > k {
                net.insert(key.clone(), *start);
                rolled_back.insert(key.clone());
            }
        }
        let mut out = Vec::with_capacity(batch.len());
        for (idx, u) in batch.iter().enumerate() {
            match u {
                ItemUpdate::Insert(i) | ItemUpdate::Delete(i) if rolled_back.contains(i) => {
                    log.push(TruncationEvent { step: t, index: idx, key: i.clone() });
                    out.push(ItemUpdate::Noop);
                }
                other => out.push(other.clone()),
            }
        }
        for (key, n) in &net {
            let live = *n > 0;
            let c = committed.entry(key.clone()).or_insert(false);
            if live != *c {
                *flips.entry(key.clone()).or_insert(0) += 1;
                *c = live;
            }
        }
        steps.push(out);
    }
    (ItemStream { steps }, log)
}

/// Online truncation to degree contribution at most `k`: once an edge has
/// received `k` updates, every later update of that edge becomes a no-op.
pub fn truncate_graph(s: &GraphStream, k: u64) -> (GraphStream, Vec<TruncationEvent>) {
    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut log = Vec::new();
    let mut steps = Vec::with_capacity(s.horizon());
    for (t, batch) in s.steps.iter().enumerate() {
        let mut out = Vec::with_capacity(batch.len());
        for (idx, u) in batch.iter().enumerate() {
            match u.endpoints() {
                Some(e) => {
                    let c = counts.entry(e).or_insert(0);
                    if *c >= k {
                        log.push(TruncationEvent {
                            step: t,
                            index: idx,
                            key: format!("({}, {})", e.0, e.1),
                        });
                        out.push(EdgeUpdate::Noop);
                    } else {
                        *c += 1;
                        out.push(*u);
                    }
                }
                None => out.push(EdgeUpdate::Noop),
            }
        }
        steps.push(out);
    }
    (GraphStream { nodes: s.nodes, steps }, log)
}

/// Mode-dispatched truncation. Triangle contribution has no defined
/// truncation semantics and is refused.
pub fn truncate(
    s: &StreamData,
    mode: ContributionMode,
    k: u64,
) -> Result<(StreamData, Vec<TruncationEvent>)> {
    match (s, mode) {
        (StreamData::Items(items), ContributionMode::Flippancy) => {
            let (out, log) = truncate_items(items, k);
            Ok((StreamData::Items(out), log))
        }
        (StreamData::Graph(graph), ContributionMode::DegreeContribution) => {
            let (out, log) = truncate_graph(graph, k);
            Ok((StreamData::Graph(out), log))
        }
        (_, ContributionMode::TriangleContribution) => Err(Error::TruncationUndefined),
        _ => Err(Error::InvalidParams("stream kind does not match the tracked mode".into())),
    }
}

/// The three estimation problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    CountDistinct,
    DegreeCount,
    TriangleCount,
}

/// How to build the continual counter for a given horizon.
#[derive(Debug, Clone, Copy)]
pub enum FactorSpec {
    Naive,
    Sqrt,
    Tree { branching: u64, variant: TreeVariant },
}

impl FactorSpec {
    pub fn build(&self, horizon: usize) -> Result<Factorization> {
        match *self {
            FactorSpec::Naive => Factorization::naive(horizon),
            FactorSpec::Sqrt => Factorization::sqrt(horizon),
            FactorSpec::Tree { branching, variant } => {
                Factorization::tree(branching, variant, horizon)
            }
        }
    }
}

/// Configuration of an end-to-end estimation run. For `DegreeCount` the
/// budget is the total: it is split in half per affected node, since an
/// edge touches exactly two degree counters.
#[derive(Debug, Clone)]
pub struct EstimateConfig {
    pub factorization: FactorSpec,
    pub budget: PrivacyBudget,
    pub l1_bound: u64,
    pub interval_bound: Option<u64>,
    pub seed: u64,
    pub scale_override: Option<f64>,
}

/// Per-step outputs of a run: a scalar stream or one stream per node.
#[derive(Debug, Clone)]
pub enum EstimateOutputs {
    Scalar(Vec<f64>),
    PerNode(Vec<Vec<f64>>),
}

/// The exact statistics of the input stream, for reporting.
#[derive(Debug, Clone)]
pub enum TrueValues {
    Scalar(Vec<i64>),
    PerNode(Vec<Vec<i64>>),
}

/// A completed estimation run.
#[derive(Debug, Clone)]
pub struct EstimatorRun {
    pub problem: Problem,
    pub outputs: EstimateOutputs,
    pub truth: TrueValues,
    pub truncation_log: Vec<TruncationEvent>,
    /// Calibration records of the underlying mechanism run(s).
    pub mechanisms: Vec<MechanismRun>,
}

fn cumulative(diff: &[i64]) -> Vec<i64> {
    let mut acc = 0i64;
    diff.iter()
        .map(|d| {
            acc += d;
            acc
        })
        .collect()
}

fn mechanism_config(
    budget: PrivacyBudget,
    set: SetParams,
    seed: u64,
    scale_override: Option<f64>,
) -> MechanismConfig {
    let mut c = MechanismConfig::new(budget, set, seed);
    if let Some(s) = scale_override {
        c = c.with_scale_override(s);
    }
    c
}

/// Largest degree reached anywhere in the stream.
pub fn max_degree(s: &GraphStream) -> u64 {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); s.nodes()];
    let mut best = 0usize;
    for batch in &s.steps {
        for u in batch {
            apply_edge(&mut adj, u);
            if let Some((a, b)) = u.endpoints() {
                best = best.max(adj[a].len()).max(adj[b].len());
            }
        }
    }
    best as u64
}

/// End-to-end private estimation: truncate (where defined), build the
/// difference stream(s), and run the continual counting mechanism.
///
/// * `CountDistinct`: truncated to flippancy `k`, counted over the
///   alternating set with ℓ1 bound `k`; the whole run uses the full budget.
/// * `DegreeCount`: truncated to degree contribution `k`; one counter per
///   node at half the declared budget each.
/// * `TriangleCount`: requires the interval bound `D`; the input must obey
///   the degree bound, no truncation exists, and privacy holds only against
///   degree- and contribution-bounded neighbors.
pub fn estimate(
    problem: Problem,
    stream: &StreamData,
    config: &EstimateConfig,
    opts: &SensOptions,
) -> Result<EstimatorRun> {
    match (problem, stream) {
        (Problem::CountDistinct, StreamData::Items(s)) => {
            let t = s.horizon();
            let (trunc, log) = truncate_items(s, config.l1_bound);
            let diff = diff_stream_countdistinct(&trunc);
            let set = SetParams::new(1, config.l1_bound, t)?;
            let f = config.factorization.build(t)?;
            let mc = mechanism_config(config.budget, set, config.seed, config.scale_override);
            let run = run_stream(&f, &mc, &diff, opts)?;
            Ok(EstimatorRun {
                problem,
                outputs: EstimateOutputs::Scalar(run.outputs.clone()),
                truth: TrueValues::Scalar(cumulative(&diff_stream_countdistinct(s))),
                truncation_log: log,
                mechanisms: vec![run],
            })
        }
        (Problem::DegreeCount, StreamData::Graph(s)) => {
            let t = s.horizon();
            let (trunc, log) = truncate_graph(s, config.l1_bound);
            let diffs = diff_stream_degree(&trunc);
            let set = SetParams::new(1, config.l1_bound, t)?;
            let f = config.factorization.build(t)?;
            let per_node_budget = config.budget.split(2.0);
            let mut outputs = Vec::with_capacity(s.nodes());
            let mut mechanisms = Vec::with_capacity(s.nodes());
            for (node, diff) in diffs.iter().enumerate() {
                let mc = mechanism_config(
                    per_node_budget,
                    set,
                    derive_seed(config.seed, node as u64),
                    config.scale_override,
                );
                let run = run_stream(&f, &mc, diff, opts)?;
                outputs.push(run.outputs.clone());
                mechanisms.push(run);
            }
            let truth: Vec<Vec<i64>> =
                diff_stream_degree(s).iter().map(|d| cumulative(d)).collect();
            Ok(EstimatorRun {
                problem,
                outputs: EstimateOutputs::PerNode(outputs),
                truth: TrueValues::PerNode(truth),
                truncation_log: log,
                mechanisms,
            })
        }
        (Problem::TriangleCount, StreamData::Graph(s)) => {
            let t = s.horizon();
            let d = config.interval_bound.ok_or_else(|| {
                Error::InvalidParams(
                    "triangle counting requires the degree bound (interval bound)".into(),
                )
            })?;
            let observed = max_degree(s);
            if observed > d {
                return Err(Error::DegreeBoundViolated {
                    node: 0,
                    degree: observed as usize,
                    bound: d,
                });
            }
            let diff = diff_stream_triangles(s);
            let set = SetParams::new(d, config.l1_bound, t)?;
            let f = config.factorization.build(t)?;
            let mc = mechanism_config(config.budget, set, config.seed, config.scale_override);
            let run = run_stream(&f, &mc, &diff, opts)?;
            Ok(EstimatorRun {
                problem,
                outputs: EstimateOutputs::Scalar(run.outputs.clone()),
                truth: TrueValues::Scalar(cumulative(&diff)),
                truncation_log: Vec::new(),
                mechanisms: vec![run],
            })
        }
        _ => Err(Error::InvalidParams("stream kind does not match the problem".into())),
    }
}
