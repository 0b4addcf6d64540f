//! Log-likelihood-ratio weights, prefix edge counts and Bernoulli KL constants.
//!
//! All quantities are in nats.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{pair_count, pair_index, validate_subgraph, ErParams, GraphSnapshot};
use crate::scan::WeightedPairGraph;

/// Longest window the 32-bit prefix counters accept.
pub const MAX_WINDOW: u64 = (1 << 31) - 1;

/// Per-pair log-likelihood-ratio contributions of a present and an absent edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrWeights {
    pub w_present: f64,
    pub w_absent: f64,
    pub p0: ErParams,
    pub p1: ErParams,
}

impl LlrWeights {
    pub fn new(p0: ErParams, p1: ErParams) -> Result<Self> {
        if p0 == p1 {
            return Err(Error::DegenerateContrast(p0.p()));
        }
        let (a, b) = (p0.p(), p1.p());
        Ok(Self {
            w_present: (b / a).ln(),
            w_absent: ((1.0 - b) / (1.0 - a)).ln(),
            p0,
            p1,
        })
    }

    /// Whether the post-change law makes edges more likely.
    #[inline]
    pub fn favours_density(&self) -> bool {
        self.w_present > self.w_absent
    }

    /// LLR of `slots` pair-time observations of which `present` are edges.
    #[inline]
    pub fn llr(&self, present: u64, slots: u64) -> f64 {
        debug_assert!(present <= slots);
        self.w_present * present as f64 + self.w_absent * (slots - present) as f64
    }
}

/// Same as [`LlrWeights::new`].
pub fn make_weights(p0: ErParams, p1: ErParams) -> Result<LlrWeights> {
    LlrWeights::new(p0, p1)
}

#[inline]
pub(crate) fn pairs_in(size: usize) -> u64 {
    (size * size.saturating_sub(1) / 2) as u64
}

/// `ℓ_V(G)`: log-likelihood ratio of one snapshot restricted to `subgraph`.
pub fn snapshot_llr(graph: &GraphSnapshot, subgraph: &[usize], weights: &LlrWeights) -> Result<f64> {
    let e = crate::graph::edge_count_within(graph, subgraph)? as u64;
    Ok(weights.llr(e, pairs_in(subgraph.len())))
}

/// Prefix sums `C_t(i,j) = Σ_{m≤t} G_ij(m)` over every unordered pair.
///
/// With a retention limit `m`, only the prefix rows needed for windows of
/// length at most `m` ending at the current horizon are kept.
#[derive(Debug, Clone)]
pub struct EdgeCountMatrix {
    num_nodes: usize,
    horizon: u64,
    // rows[i] holds C_{base + i}
    base: u64,
    rows: VecDeque<Vec<u32>>,
    retention: Option<usize>,
}

impl EdgeCountMatrix {
    pub fn new(num_nodes: usize) -> Self {
        Self::build(num_nodes, None)
    }

    /// Keeps only enough history for windows of at most `max_window` steps.
    pub fn with_retention(num_nodes: usize, max_window: usize) -> Self {
        Self::build(num_nodes, Some(max_window.max(1)))
    }

    fn build(num_nodes: usize, retention: Option<usize>) -> Self {
        let mut rows = VecDeque::new();
        rows.push_back(vec![0u32; pair_count(num_nodes)]);
        Self {
            num_nodes,
            horizon: 0,
            base: 0,
            rows,
            retention,
        }
    }

    pub fn from_snapshots(graphs: &[GraphSnapshot]) -> Result<Self> {
        let first = graphs.first().ok_or(Error::EmptyStream)?;
        let mut m = Self::new(first.num_nodes());
        for g in graphs {
            m.push(g)?;
        }
        Ok(m)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Time index of the latest appended snapshot (0 when empty).
    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Earliest window start still answerable.
    pub fn earliest_start(&self) -> u64 {
        self.base + 1
    }

    pub fn push(&mut self, graph: &GraphSnapshot) -> Result<()> {
        if graph.num_nodes() != self.num_nodes {
            return Err(Error::param(format!(
                "snapshot has {} nodes, expected {}",
                graph.num_nodes(),
                self.num_nodes
            )));
        }
        if self.horizon >= MAX_WINDOW {
            return Err(Error::param("prefix counters exhausted (2^31 - 1 steps)"));
        }
        let mut row = self.rows.back().expect("at least one row").clone();
        for p in graph.present_pairs() {
            row[p] += 1;
        }
        self.rows.push_back(row);
        self.horizon += 1;
        if let Some(keep) = self.retention {
            while self.rows.len() > keep + 1 {
                self.rows.pop_front();
                self.base += 1;
            }
        }
        Ok(())
    }

    /// Cumulative count `C_t` for pair index `pair`.
    pub fn prefix(&self, t: u64, pair: usize) -> Result<u32> {
        if t < self.base || t > self.horizon {
            return Err(Error::WindowOutOfRange {
                start: t + 1,
                end: t,
                first: self.base + 1,
                last: self.horizon,
            });
        }
        Ok(self.rows[(t - self.base) as usize][pair])
    }

    fn check_window(&self, start: u64, end: u64) -> Result<(&[u32], &[u32])> {
        if start > end {
            return Err(Error::InvalidWindow { start, end });
        }
        if start == 0 || start <= self.base || end > self.horizon {
            return Err(Error::WindowOutOfRange {
                start,
                end,
                first: self.base + 1,
                last: self.horizon,
            });
        }
        if end - start + 1 > MAX_WINDOW {
            return Err(Error::param("window longer than 2^31 - 1 steps"));
        }
        let hi = &self.rows[(end - self.base) as usize];
        let lo = &self.rows[(start - 1 - self.base) as usize];
        Ok((lo, hi))
    }

    /// Windowed count `C_end(i,j) − C_{start−1}(i,j)` for `i < j`.
    pub fn window_count(&self, start: u64, end: u64, i: usize, j: usize) -> Result<u32> {
        let (lo, hi) = self.check_window(start, end)?;
        let p = pair_index(self.num_nodes, i.min(j), i.max(j));
        Ok(hi[p] - lo[p])
    }

    /// Total windowed edge count inside `subgraph` (unchecked indices).
    pub(crate) fn window_edges_within(&self, start: u64, end: u64, subgraph: &[usize]) -> Result<u64> {
        let (lo, hi) = self.check_window(start, end)?;
        let n = self.num_nodes;
        let mut total = 0u64;
        for (a, &u) in subgraph.iter().enumerate() {
            for &v in &subgraph[a + 1..] {
                let p = pair_index(n, u.min(v), u.max(v));
                total += (hi[p] - lo[p]) as u64;
            }
        }
        Ok(total)
    }

    /// Aggregated pair weights over the window `[start, end]`.
    pub fn window_weights(&self, start: u64, end: u64) -> Result<WeightedPairGraph> {
        let (lo, hi) = self.check_window(start, end)?;
        let weights = hi.iter().zip(lo).map(|(h, l)| h - l).collect();
        Ok(WeightedPairGraph::from_pair_weights(self.num_nodes, weights))
    }
}

/// `R_{t,k,V}`: LLR of snapshots `start..=end` restricted to `subgraph`,
/// computed from prefix counts in `O(|V|²)`.
pub fn window_llr(
    counts: &EdgeCountMatrix,
    start: u64,
    end: u64,
    subgraph: &[usize],
    weights: &LlrWeights,
) -> Result<f64> {
    validate_subgraph(counts.num_nodes(), subgraph)?;
    let e = counts.window_edges_within(start, end, subgraph)?;
    Ok(weights.llr(e, (end - start + 1) * pairs_in(subgraph.len())))
}

/// `KL(Bern(q) ‖ Bern(p))` with `0·log 0 = 0`.
pub fn bernoulli_kl(q: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("reference probability must lie in (0, 1); got {p}")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param(format!("probability must lie in [0, 1]; got {q}")));
    }
    let present = if q > 0.0 { q * (q / p).ln() } else { 0.0 };
    let absent = if q < 1.0 {
        (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln()
    } else {
        0.0
    };
    // rounding can push the exact-zero case slightly negative
    Ok((present + absent).max(0.0))
}

fn check_contrast(n: usize, p0: ErParams, p1: ErParams) -> Result<()> {
    if n < 2 {
        return Err(Error::param(format!("community size must be >= 2; got {n}")));
    }
    if p0 == p1 {
        return Err(Error::DegenerateContrast(p0.p()));
    }
    Ok(())
}

/// `I = C(n,2)·KL(p1 ‖ p0)`, the per-step post-change drift of the oracle LLR.
pub fn change_information(n: usize, p0: ErParams, p1: ErParams) -> Result<f64> {
    check_contrast(n, p0, p1)?;
    Ok(pairs_in(n) as f64 * bernoulli_kl(p1.p(), p0.p())?)
}

/// Pre-change mean of `ℓ_V(G)`, i.e. `−C(n,2)·KL(p0 ‖ p1)`.
pub fn null_drift(n: usize, p0: ErParams, p1: ErParams) -> Result<f64> {
    check_contrast(n, p0, p1)?;
    Ok(-(pairs_in(n) as f64) * bernoulli_kl(p0.p(), p1.p())?)
}
