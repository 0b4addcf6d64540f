//! Candidate subgraphs and densest-subgraph search.
//!
//! The scan statistic for a window is affine in the total internal pair weight
//! `W(V)` of a candidate, so maximising the likelihood ratio over candidates is
//! a densest-`n`-subgraph problem (or sparsest, when the change lowers the
//! edge probability). Exact search enumerates all `C(N, n)` candidates; the
//! greedy search takes the `⌈n/2⌉` vertices of highest weighted degree and
//! completes them with the `⌊n/2⌋` outside vertices carrying the most weight
//! into that core.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{pair_count, pair_index, validate_subgraph};
use crate::likelihood::{pairs_in, LlrWeights};

/// Default limit on `C(N, n)` for exhaustive enumeration.
pub const DEFAULT_CANDIDATE_CAP: u64 = 200_000;

/// Exact `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `ln C(n, k)` without forming the integer.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// Lexicographic iterator over sorted `k`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] < self.n - k + i {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// How the scan maximises over subgraphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    Exhaustive,
    Greedy,
}

impl fmt::Display for ScanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanMode::Exhaustive => "exhaustive",
            ScanMode::Greedy => "greedy",
        })
    }
}

impl FromStr for ScanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exhaustive" => Ok(ScanMode::Exhaustive),
            "greedy" => Ok(ScanMode::Greedy),
            other => Err(Error::param(format!(
                "scan mode must be `exhaustive` or `greedy`; got {other:?}"
            ))),
        }
    }
}

/// The candidate family `𝒱`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    mode: ScanMode,
    num_nodes: usize,
    community_size: usize,
    count: u128,
    cap: u64,
    connected_only: bool,
}

impl CandidateSet {
    /// Enumeration cap the set was built with.
    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn mode(&self) -> ScanMode {
        self.mode
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn community_size(&self) -> usize {
        self.community_size
    }

    /// `C(N, n)`, whether or not the set is materialised.
    pub fn count(&self) -> u128 {
        self.count
    }

    pub fn connected_only(&self) -> bool {
        self.connected_only
    }

    /// Keep only candidates that induce a connected subgraph in the window's
    /// positive-weight graph. Applies to exhaustive scans only.
    pub fn with_connected_filter(mut self, on: bool) -> Self {
        self.connected_only = on;
        self
    }

    /// Forces greedy-only mode regardless of the count.
    pub fn into_greedy(mut self) -> Self {
        self.mode = ScanMode::Greedy;
        self
    }

    /// Lexicographic candidate iterator; `None` in greedy-only mode.
    pub fn iter(&self) -> Option<Combinations> {
        match self.mode {
            ScanMode::Exhaustive => Some(Combinations::new(self.num_nodes, self.community_size)),
            ScanMode::Greedy => None,
        }
    }
}

/// Builds `𝒱`: exhaustive iff `C(N, n) ≤ cap`, greedy-only otherwise.
pub fn enumerate_candidates(num_nodes: usize, community_size: usize, cap: u64) -> Result<CandidateSet> {
    if community_size < 2 || community_size >= num_nodes {
        return Err(Error::param(format!(
            "community size must satisfy 2 <= n < N; got n = {community_size}, N = {num_nodes}"
        )));
    }
    let count = binomial(num_nodes, community_size);
    let mode = if count <= cap as u128 {
        ScanMode::Exhaustive
    } else {
        ScanMode::Greedy
    };
    Ok(CandidateSet {
        mode,
        num_nodes,
        community_size,
        count,
        cap,
        connected_only: false,
    })
}

/// Nonnegative integer weight per unordered pair, in canonical pair order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedPairGraph {
    num_nodes: usize,
    weights: Vec<u32>,
}

impl WeightedPairGraph {
    pub fn new(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            weights: vec![0; pair_count(num_nodes)],
        }
    }

    pub fn from_pair_weights(num_nodes: usize, weights: Vec<u32>) -> Self {
        assert_eq!(weights.len(), pair_count(num_nodes), "one weight per pair");
        Self { num_nodes, weights }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn pair_weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> u32 {
        if i == j {
            return 0;
        }
        self.weights[pair_index(self.num_nodes, i.min(j), i.max(j))]
    }

    pub fn set_weight(&mut self, i: usize, j: usize, w: u32) {
        assert_ne!(i, j, "no self-loops");
        let p = pair_index(self.num_nodes, i.min(j), i.max(j));
        self.weights[p] = w;
    }

    /// Weighted degree of every node.
    pub fn degrees(&self) -> Vec<u64> {
        let n = self.num_nodes;
        let mut deg = vec![0u64; n];
        let mut p = 0;
        for i in 0..n {
            for j in i + 1..n {
                let w = self.weights[p] as u64;
                deg[i] += w;
                deg[j] += w;
                p += 1;
            }
        }
        deg
    }

    /// `W(V)`, the total weight of pairs inside `subgraph`.
    pub fn internal_weight(&self, subgraph: &[usize]) -> u64 {
        let mut total = 0u64;
        for (a, &u) in subgraph.iter().enumerate() {
            for &v in &subgraph[a + 1..] {
                total += self.weight(u, v) as u64;
            }
        }
        total
    }

    /// `cap − w` on every pair; turns a sparsest search into a densest one.
    pub fn complement(&self, cap: u32) -> Self {
        let weights = self
            .weights
            .iter()
            .map(|&w| {
                assert!(w <= cap, "weight {w} above complement cap {cap}");
                cap - w
            })
            .collect();
        Self {
            num_nodes: self.num_nodes,
            weights,
        }
    }

    /// Whether `subgraph` is connected through pairs of positive weight.
    pub fn is_connected_within(&self, subgraph: &[usize]) -> bool {
        if subgraph.len() <= 1 {
            return true;
        }
        let mut reached = vec![false; subgraph.len()];
        reached[0] = true;
        let mut stack = vec![0usize];
        while let Some(a) = stack.pop() {
            for b in 0..subgraph.len() {
                if !reached[b] && self.weight(subgraph[a], subgraph[b]) > 0 {
                    reached[b] = true;
                    stack.push(b);
                }
            }
        }
        reached.into_iter().all(|r| r)
    }
}

/// Picks the `k` indices with the largest key, ties by ascending index.
fn top_by_key(candidates: impl Iterator<Item = usize>, k: usize, key: impl Fn(usize) -> u64) -> Vec<usize> {
    let mut pool: Vec<(std::cmp::Reverse<u64>, usize)> =
        candidates.map(|v| (std::cmp::Reverse(key(v)), v)).collect();
    if k < pool.len() {
        if k > 0 {
            pool.select_nth_unstable(k - 1);
        }
        pool.truncate(k);
    }
    pool.sort_unstable();
    pool.into_iter().map(|(_, v)| v).collect()
}

/// Greedy core-then-completion search shared by the scan paths.
pub(crate) fn greedy_select(
    num_nodes: usize,
    size: usize,
    degrees: &[u64],
    weight: impl Fn(usize, usize) -> u64,
) -> Vec<usize> {
    let size = size.min(num_nodes);
    let core_size = size.div_ceil(2);
    let core = top_by_key(0..num_nodes, core_size, |v| degrees[v]);
    let mut in_core = vec![false; num_nodes];
    for &h in &core {
        in_core[h] = true;
    }
    let into_core = |v: usize| core.iter().map(|&h| weight(v, h)).sum::<u64>();
    let rest = top_by_key(
        (0..num_nodes).filter(|&v| !in_core[v]),
        size - core_size,
        into_core,
    );
    let mut out = core;
    out.extend(rest);
    out.sort_unstable();
    out
}

/// Greedy approximation to the densest `n`-subgraph; always returns `n`
/// distinct sorted nodes (or all nodes when `n ≥ N`).
pub fn greedy_densest(weights: &WeightedPairGraph, n: usize) -> Vec<usize> {
    let deg = weights.degrees();
    greedy_select(weights.num_nodes(), n, &deg, |u, v| weights.weight(u, v) as u64)
}

/// Exact densest `n`-subgraph by enumeration; ties go to the
/// lexicographically smallest node list.
pub fn brute_force_densest(weights: &WeightedPairGraph, n: usize, cap: u64) -> Result<Vec<usize>> {
    let num_nodes = weights.num_nodes();
    if n == 0 || n > num_nodes {
        return Err(Error::param(format!(
            "subgraph size must be in 1..={num_nodes}; got {n}"
        )));
    }
    let count = binomial(num_nodes, n);
    if count > cap as u128 {
        return Err(Error::EnumerationCap {
            num_nodes,
            size: n,
            count,
            cap,
        });
    }
    let mut best: Option<(u64, Vec<usize>)> = None;
    for cand in Combinations::new(num_nodes, n) {
        let w = weights.internal_weight(&cand);
        if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
            best = Some((w, cand));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

/// Maximiser of the window statistic and its value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub subgraph: Vec<usize>,
    pub statistic: f64,
}

/// `R = w_present·W(V) + w_absent·(L·C(n,2) − W(V))` for a window of length `L`.
#[inline]
pub fn window_statistic(llr: &LlrWeights, internal_weight: u64, window_len: u64, size: usize) -> f64 {
    llr.llr(internal_weight, window_len * pairs_in(size))
}

/// Most likely changed subgraph for one window of aggregated counts.
///
/// Exhaustive mode scans every candidate (lexicographic tie-break). Greedy
/// mode runs [`greedy_densest`], on the complemented weights when the change
/// lowers the edge probability. Returns `None` only when the connectivity
/// filter rejects every candidate.
pub fn best_subgraph(
    weights: &WeightedPairGraph,
    candidates: &CandidateSet,
    llr: &LlrWeights,
    window_len: u64,
) -> Result<Option<ScanResult>> {
    if window_len == 0 {
        return Err(Error::param("window length must be >= 1"));
    }
    if weights.num_nodes() != candidates.num_nodes() {
        return Err(Error::param("weight graph and candidate set disagree on N"));
    }
    let n = candidates.community_size();
    match candidates.iter() {
        Some(iter) => {
            let mut best: Option<ScanResult> = None;
            for cand in iter {
                let r = window_statistic(llr, weights.internal_weight(&cand), window_len, n);
                if best.as_ref().is_some_and(|b| r <= b.statistic) {
                    continue;
                }
                if candidates.connected_only() && !weights.is_connected_within(&cand) {
                    continue;
                }
                best = Some(ScanResult {
                    subgraph: cand,
                    statistic: r,
                });
            }
            Ok(best)
        }
        None => {
            let subgraph = if llr.favours_density() {
                greedy_densest(weights, n)
            } else {
                let cap = u32::try_from(window_len)
                    .map_err(|_| Error::param("window too long for complement weights"))?;
                greedy_densest(&weights.complement(cap), n)
            };
            let r = window_statistic(llr, weights.internal_weight(&subgraph), window_len, n);
            Ok(Some(ScanResult {
                subgraph,
                statistic: r,
            }))
        }
    }
}

/// Validates and sorts a user-supplied subgraph.
pub fn normalize_subgraph(num_nodes: usize, subgraph: &[usize]) -> Result<Vec<usize>> {
    validate_subgraph(num_nodes, subgraph)?;
    let mut v = subgraph.to_vec();
    v.sort_unstable();
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ErParams;

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 5), 6);
        assert_eq!(binomial(20, 5), 15_504);
        assert_eq!(binomial(50, 5), 2_118_760);
        assert_eq!(binomial(3, 5), 0);
        assert!((ln_binomial(20, 5) - (15_504f64).ln()).abs() < 1e-12);
        assert!(ln_binomial(10_000, 5_000).is_finite());
    }

    #[test]
    fn combinations_are_lexicographic() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(
            all,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(Combinations::new(20, 5).count(), 15_504);
    }

    #[test]
    fn candidate_modes() {
        let c = enumerate_candidates(6, 5, DEFAULT_CANDIDATE_CAP).unwrap();
        assert_eq!(c.mode(), ScanMode::Exhaustive);
        assert_eq!(c.iter().unwrap().count(), 6);
        let c = enumerate_candidates(20, 5, DEFAULT_CANDIDATE_CAP).unwrap();
        assert_eq!(c.count(), 15_504);
        assert_eq!(c.mode(), ScanMode::Exhaustive);
        let c = enumerate_candidates(50, 5, DEFAULT_CANDIDATE_CAP).unwrap();
        assert_eq!(c.mode(), ScanMode::Greedy);
        assert!(c.iter().is_none());
        assert!(enumerate_candidates(5, 5, 10).is_err());
        assert!(enumerate_candidates(5, 1, 10).is_err());
    }

    #[test]
    fn greedy_finds_embedded_clique() {
        let mut w = WeightedPairGraph::new(12);
        let clique = [2, 4, 7, 9, 11];
        for (a, &u) in clique.iter().enumerate() {
            for &v in &clique[a + 1..] {
                w.set_weight(u, v, 1);
            }
        }
        assert_eq!(greedy_densest(&w, 5), clique.to_vec());
        assert_eq!(brute_force_densest(&w, 5, 10_000).unwrap(), clique.to_vec());
    }

    #[test]
    fn ties_go_to_low_indices() {
        let w = WeightedPairGraph::new(9);
        assert_eq!(greedy_densest(&w, 4), vec![0, 1, 2, 3]);
        let mut u = WeightedPairGraph::new(7);
        for i in 0..7 {
            for j in i + 1..7 {
                u.set_weight(i, j, 3);
            }
        }
        assert_eq!(brute_force_densest(&u, 3, 1_000).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn brute_force_single_pair_and_cap() {
        let mut w = WeightedPairGraph::new(10);
        w.set_weight(7, 2, 5);
        assert_eq!(brute_force_densest(&w, 2, 1_000).unwrap(), vec![2, 7]);
        assert!(matches!(
            brute_force_densest(&w, 5, 100),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn connectivity_filter() {
        let mut w = WeightedPairGraph::new(5);
        w.set_weight(0, 1, 1);
        w.set_weight(1, 2, 1);
        w.set_weight(3, 4, 2);
        assert!(w.is_connected_within(&[0, 1, 2]));
        assert!(!w.is_connected_within(&[0, 1, 3]));
    }

    #[test]
    fn sparsest_search_for_decreasing_change() {
        let llr = LlrWeights::new(ErParams::new(0.5).unwrap(), ErParams::new(0.1).unwrap()).unwrap();
        // every pair weight 3 except a silent triangle on {1, 3, 4}
        let mut w = WeightedPairGraph::new(6);
        for i in 0..6 {
            for j in i + 1..6 {
                w.set_weight(i, j, 3);
            }
        }
        for (a, b) in [(1, 3), (1, 4), (3, 4)] {
            w.set_weight(a, b, 0);
        }
        let exact = enumerate_candidates(6, 3, 1_000).unwrap();
        let r = best_subgraph(&w, &exact, &llr, 3).unwrap().unwrap();
        assert_eq!(r.subgraph, vec![1, 3, 4]);
        let greedy = exact.clone().into_greedy();
        let g = best_subgraph(&w, &greedy, &llr, 3).unwrap().unwrap();
        assert_eq!(g.subgraph, vec![1, 3, 4]);
        assert!((r.statistic - 9.0 * llr.w_absent).abs() < 1e-12);
    }
}
