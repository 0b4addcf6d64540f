//! Graph snapshots, the change scenario and seeded samplers.
//!
//! A snapshot stores only unordered pairs `i < j` in a packed bitset indexed by
//! the canonical row-major pair order `(0,1), (0,2), …, (0,N-1), (1,2), …`.
//! Samplers consume exactly one uniform draw per pair in that order, so a
//! sequence is a pure function of the scenario and the seed.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Number of unordered pairs on `num_nodes` nodes.
#[inline]
pub fn pair_count(num_nodes: usize) -> usize {
    num_nodes * num_nodes.saturating_sub(1) / 2
}

/// Canonical index of the unordered pair `{i, j}`, `i < j < num_nodes`.
#[inline]
pub fn pair_index(num_nodes: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < num_nodes);
    i * (2 * num_nodes - i - 1) / 2 + (j - i - 1)
}

/// Inverse of [`pair_index`] as a lookup table.
pub fn pair_table(num_nodes: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(pair_count(num_nodes));
    for i in 0..num_nodes {
        for j in i + 1..num_nodes {
            out.push((i, j));
        }
    }
    out
}

/// One undirected simple graph on `N` labelled nodes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GraphSnapshot {
    num_nodes: usize,
    bits: Vec<u64>,
}

impl fmt::Debug for GraphSnapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphSnapshot")
            .field("num_nodes", &self.num_nodes)
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}

impl GraphSnapshot {
    pub fn empty(num_nodes: usize) -> Self {
        let words = pair_count(num_nodes).div_ceil(64);
        Self {
            num_nodes,
            bits: vec![0; words],
        }
    }

    pub fn complete(num_nodes: usize) -> Self {
        let mut g = Self::empty(num_nodes);
        for p in 0..pair_count(num_nodes) {
            g.set_pair(p);
        }
        g
    }

    /// Builds a snapshot from an edge list; each edge may be given in either
    /// orientation but self-loops and out-of-range nodes are rejected.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(num_nodes);
        for &(a, b) in edges {
            g.insert(a, b)?;
        }
        Ok(g)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return Err(Error::InvalidSubgraph(format!("self-loop ({i},{i})")));
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if b >= self.num_nodes {
            return Err(Error::InvalidSubgraph(format!(
                "node {b} out of range for N = {}",
                self.num_nodes
            )));
        }
        self.set_pair(pair_index(self.num_nodes, a, b));
        Ok(())
    }

    #[inline]
    pub(crate) fn set_pair(&mut self, p: usize) {
        self.bits[p >> 6] |= 1u64 << (p & 63);
    }

    #[inline]
    pub fn has_pair(&self, p: usize) -> bool {
        (self.bits[p >> 6] >> (p & 63)) & 1 == 1
    }

    /// Symmetric edge query; `has_edge(i, i)` is always false.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j || i >= self.num_nodes || j >= self.num_nodes {
            return false;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.has_pair(pair_index(self.num_nodes, a, b))
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Canonical indices of present pairs, ascending.
    pub fn present_pairs(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + bit)
            })
        })
    }

    /// Present edges as `(i, j)` with `i < j`, in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.num_nodes;
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .enumerate()
            .filter(|&(p, _)| self.has_pair(p))
            .map(|(_, e)| e)
    }
}

/// Checks that `subgraph` holds distinct node indices below `num_nodes`.
pub fn validate_subgraph(num_nodes: usize, subgraph: &[usize]) -> Result<()> {
    let mut seen = vec![false; num_nodes];
    for &v in subgraph {
        if v >= num_nodes {
            return Err(Error::InvalidSubgraph(format!(
                "node {v} out of range for N = {num_nodes}"
            )));
        }
        if seen[v] {
            return Err(Error::InvalidSubgraph(format!("duplicate node {v}")));
        }
        seen[v] = true;
    }
    Ok(())
}

/// Number of present edges with both endpoints in `subgraph`.
pub fn edge_count_within(graph: &GraphSnapshot, subgraph: &[usize]) -> Result<usize> {
    validate_subgraph(graph.num_nodes(), subgraph)?;
    Ok(edge_count_within_unchecked(graph, subgraph))
}

pub(crate) fn edge_count_within_unchecked(graph: &GraphSnapshot, subgraph: &[usize]) -> usize {
    let mut count = 0;
    for (a, &u) in subgraph.iter().enumerate() {
        for &v in &subgraph[a + 1..] {
            count += graph.has_edge(u, v) as usize;
        }
    }
    count
}

/// An edge probability strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ErParams(f64);

impl ErParams {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 && p < 1.0 {
            Ok(Self(p))
        } else {
            Err(Error::param(format!(
                "edge probability must lie in the open interval (0, 1); got {p}"
            )))
        }
    }

    #[inline]
    pub fn p(self) -> f64 {
        self.0
    }
}

/// Change-point `τ`; [`ChangePoint::Never`] is the no-change regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangePoint {
    At(u64),
    Never,
}

impl ChangePoint {
    /// Whether the post-change law is active at time `t` (1-based).
    #[inline]
    pub fn is_active(self, t: u64) -> bool {
        match self {
            ChangePoint::At(tau) => t >= tau,
            ChangePoint::Never => false,
        }
    }
}

impl fmt::Display for ChangePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChangePoint::At(t) => write!(f, "{t}"),
            ChangePoint::Never => f.write_str("inf"),
        }
    }
}

impl FromStr for ChangePoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "never" => Ok(ChangePoint::Never),
            other => {
                let t: u64 = other
                    .parse()
                    .map_err(|_| Error::param(format!("invalid change point {other:?}")))?;
                if t == 0 {
                    return Err(Error::param("change point must be >= 1 or inf"));
                }
                Ok(ChangePoint::At(t))
            }
        }
    }
}

/// Generative description of a graph stream with a planted community.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeScenario {
    num_nodes: usize,
    planted: Vec<usize>,
    p0: ErParams,
    p1: ErParams,
    change_point: ChangePoint,
}

impl ChangeScenario {
    pub fn new(
        num_nodes: usize,
        planted_subgraph: Vec<usize>,
        p0: ErParams,
        p1: ErParams,
        change_point: ChangePoint,
    ) -> Result<Self> {
        let n = planted_subgraph.len();
        if n < 2 || n >= num_nodes {
            return Err(Error::param(format!(
                "community size must satisfy 2 <= n < N; got n = {n}, N = {num_nodes}"
            )));
        }
        validate_subgraph(num_nodes, &planted_subgraph)?;
        if change_point != ChangePoint::Never && p0 == p1 {
            return Err(Error::DegenerateContrast(p0.p()));
        }
        let mut planted = planted_subgraph;
        planted.sort_unstable();
        Ok(Self {
            num_nodes,
            planted,
            p0,
            p1,
            change_point,
        })
    }

    /// Scenario with the community planted on nodes `0..n`.
    pub fn with_leading_community(
        num_nodes: usize,
        community_size: usize,
        p0: f64,
        p1: f64,
        change_point: ChangePoint,
    ) -> Result<Self> {
        Self::new(
            num_nodes,
            (0..community_size).collect(),
            ErParams::new(p0)?,
            ErParams::new(p1)?,
            change_point,
        )
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn community_size(&self) -> usize {
        self.planted.len()
    }

    pub fn planted_subgraph(&self) -> &[usize] {
        &self.planted
    }

    pub fn p0(&self) -> ErParams {
        self.p0
    }

    pub fn p1(&self) -> ErParams {
        self.p1
    }

    pub fn change_point(&self) -> ChangePoint {
        self.change_point
    }

    /// Same scenario with a different change-point. Setting a finite change
    /// point on a scenario with `p0 == p1` is allowed here; it is the
    /// "no effective change" case.
    pub fn with_change_point(&self, change_point: ChangePoint) -> Self {
        Self {
            change_point,
            ..self.clone()
        }
    }
}

/// Seeded pseudo-random source. Replication `r` of a Monte Carlo run under
/// master seed `s` uses stream `r` of the generator seeded with `s`, so the
/// draws of one replication never depend on scheduling.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_replication(master_seed: u64, replication: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(replication);
        Self {
            seed: master_seed,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub(crate) fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

/// Draws one `ER(N, p)` snapshot.
pub fn sample_er(num_nodes: usize, params: ErParams, rng: &mut RandomSource) -> Result<GraphSnapshot> {
    if num_nodes < 2 {
        return Err(Error::param(format!("need at least 2 nodes; got {num_nodes}")));
    }
    let p = params.p();
    let mut g = GraphSnapshot::empty(num_nodes);
    for pair in 0..pair_count(num_nodes) {
        if rng.uniform() < p {
            g.set_pair(pair);
        }
    }
    Ok(g)
}

/// Streaming sampler for a [`ChangeScenario`]; yields `G(1), G(2), …`.
#[derive(Debug, Clone)]
pub struct ScenarioSampler {
    num_nodes: usize,
    inside: Vec<bool>,
    p0: f64,
    p1: f64,
    change_point: ChangePoint,
    time: u64,
    rng: RandomSource,
}

impl ScenarioSampler {
    pub fn new(scenario: &ChangeScenario, rng: RandomSource) -> Self {
        let n = scenario.num_nodes();
        let mut inside = vec![false; pair_count(n)];
        let planted = scenario.planted_subgraph();
        for (a, &u) in planted.iter().enumerate() {
            for &v in &planted[a + 1..] {
                inside[pair_index(n, u, v)] = true;
            }
        }
        Self {
            num_nodes: n,
            inside,
            p0: scenario.p0().p(),
            p1: scenario.p1().p(),
            change_point: scenario.change_point(),
            time: 0,
            rng,
        }
    }

    /// Time index of the most recently produced snapshot.
    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn next_snapshot(&mut self) -> GraphSnapshot {
        let mut g = GraphSnapshot::empty(self.num_nodes);
        self.fill_next(&mut g);
        g
    }

    /// Overwrites `g` with the next snapshot, reusing its allocation.
    pub fn fill_next(&mut self, g: &mut GraphSnapshot) {
        self.time += 1;
        debug_assert_eq!(g.num_nodes, self.num_nodes);
        g.bits.iter_mut().for_each(|w| *w = 0);
        if self.change_point.is_active(self.time) {
            for (pair, &inside) in self.inside.iter().enumerate() {
                let p = if inside { self.p1 } else { self.p0 };
                if self.rng.uniform() < p {
                    g.set_pair(pair);
                }
            }
        } else {
            for pair in 0..self.inside.len() {
                if self.rng.uniform() < self.p0 {
                    g.set_pair(pair);
                }
            }
        }
    }
}

impl Iterator for ScenarioSampler {
    type Item = GraphSnapshot;

    fn next(&mut self) -> Option<GraphSnapshot> {
        Some(self.next_snapshot())
    }
}

/// Draws `G(1..=horizon)` for `scenario`.
pub fn sample_sequence(
    scenario: &ChangeScenario,
    horizon: usize,
    rng: RandomSource,
) -> Result<Vec<GraphSnapshot>> {
    if horizon == 0 {
        return Err(Error::param("horizon must be >= 1"));
    }
    Ok(ScenarioSampler::new(scenario, rng).take(horizon).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_index_is_row_major() {
        let n = 6;
        let table = pair_table(n);
        assert_eq!(table.len(), 15);
        for (p, &(i, j)) in table.iter().enumerate() {
            assert_eq!(pair_index(n, i, j), p);
        }
    }

    #[test]
    fn snapshot_is_symmetric_without_loops() {
        let g = GraphSnapshot::from_edges(5, &[(3, 1), (0, 4)]).unwrap();
        assert!(g.has_edge(1, 3) && g.has_edge(3, 1));
        assert!(g.has_edge(4, 0));
        assert!(!g.has_edge(2, 2));
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 4), (1, 3)]);
        assert!(GraphSnapshot::from_edges(5, &[(2, 2)]).is_err());
        assert!(GraphSnapshot::from_edges(5, &[(2, 5)]).is_err());
    }

    #[test]
    fn er_params_reject_boundaries() {
        assert!(ErParams::new(0.0).is_err());
        assert!(ErParams::new(1.0).is_err());
        assert!(ErParams::new(f64::NAN).is_err());
        assert!(ErParams::new(0.3).is_ok());
    }

    #[test]
    fn sample_er_rejects_tiny_graphs() {
        let mut rng = RandomSource::new(1);
        assert!(sample_er(1, ErParams::new(0.5).unwrap(), &mut rng).is_err());
    }

    #[test]
    fn near_zero_probability_gives_empty_graph() {
        let mut rng = RandomSource::new(99);
        let g = sample_er(2, ErParams::new(1e-12).unwrap(), &mut rng).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = ErParams::new(0.5).unwrap();
        let a = sample_er(5, p, &mut RandomSource::new(7)).unwrap();
        let b = sample_er(5, p, &mut RandomSource::new(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edge_count_within_examples() {
        let empty = GraphSnapshot::empty(8);
        assert_eq!(edge_count_within(&empty, &[1, 4, 6]).unwrap(), 0);
        let full = GraphSnapshot::complete(6);
        assert_eq!(edge_count_within(&full, &[0, 2, 3, 5]).unwrap(), 6);
        let g = GraphSnapshot::from_edges(5, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        assert_eq!(edge_count_within(&g, &[0, 1, 2]).unwrap(), 2);
        assert!(edge_count_within(&g, &[0, 0]).is_err());
        assert!(edge_count_within(&g, &[0, 5]).is_err());
    }

    #[test]
    fn scenario_validation() {
        let p = ErParams::new(0.2).unwrap();
        let q = ErParams::new(0.5).unwrap();
        assert!(ChangeScenario::new(5, vec![0, 1, 2, 3, 4], p, q, ChangePoint::At(1)).is_err());
        assert!(ChangeScenario::new(5, vec![0], p, q, ChangePoint::At(1)).is_err());
        assert!(ChangeScenario::new(5, vec![0, 0], p, q, ChangePoint::At(1)).is_err());
        assert!(matches!(
            ChangeScenario::new(5, vec![0, 1], p, p, ChangePoint::At(1)),
            Err(Error::DegenerateContrast(_))
        ));
        assert!(ChangeScenario::new(5, vec![0, 1], p, p, ChangePoint::Never).is_ok());
        let s = ChangeScenario::new(6, vec![4, 1, 2], p, q, ChangePoint::At(3)).unwrap();
        assert_eq!(s.planted_subgraph(), &[1, 2, 4]);
    }

    #[test]
    fn change_point_parsing() {
        assert_eq!("inf".parse::<ChangePoint>().unwrap(), ChangePoint::Never);
        assert_eq!("12".parse::<ChangePoint>().unwrap(), ChangePoint::At(12));
        assert!("0".parse::<ChangePoint>().is_err());
        assert_eq!(ChangePoint::Never.to_string(), "inf");
    }

    #[test]
    fn replication_streams_differ() {
        let scenario =
            ChangeScenario::with_leading_community(10, 3, 0.3, 0.6, ChangePoint::Never).unwrap();
        let a = sample_sequence(&scenario, 3, RandomSource::for_replication(5, 0)).unwrap();
        let b = sample_sequence(&scenario, 3, RandomSource::for_replication(5, 1)).unwrap();
        let a2 = sample_sequence(&scenario, 3, RandomSource::for_replication(5, 0)).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }
}
