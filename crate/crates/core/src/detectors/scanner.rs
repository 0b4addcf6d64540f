//! Incremental window-limited GLR scanners.
//!
//! The exhaustive scanner keeps, for every candidate, its within-candidate
//! edge count at each of the last `m_α` time steps, so a window statistic is a
//! running sum over at most `m_α` small integers. It also keeps the unlimited
//! CUSUM of every candidate, which upper-bounds all of that candidate's window
//! statistics; with a known `p1` any candidate whose CUSUM cannot beat the
//! current best is skipped.
//!
//! The greedy scanner keeps the last `m_α` snapshots and re-aggregates pair
//! weights window by window, running the greedy densest search per window.

use std::collections::VecDeque;

use super::glr::plug_in_statistic;
use super::{Clamp, Detector, GlrWindowConfig, P1Mode, StepReport};
use crate::error::{Error, Result};
use crate::graph::{pair_count, pair_index, ErParams, GraphSnapshot};
use crate::likelihood::{pairs_in, LlrWeights};
use crate::scan::{greedy_select, CandidateSet, Combinations, ScanMode};

/// Pruning slack for the floating-point CUSUM bound.
const BOUND_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy)]
enum Statistic {
    Known(LlrWeights),
    Mle { p0: ErParams, clamp: Clamp },
}

impl Statistic {
    /// `(value, p̂1)` for `present` edges in `slots` pair-time observations.
    #[inline]
    fn eval(&self, present: u64, slots: u64) -> (f64, Option<f64>) {
        match self {
            Statistic::Known(w) => (w.llr(present, slots), None),
            Statistic::Mle { p0, clamp } => {
                let (u, q) = plug_in_statistic(present, slots, *p0, *clamp);
                (u, Some(q))
            }
        }
    }
}

/// Best value found so far; ties prefer longer windows (smaller `k`), then
/// the lexicographically smaller subgraph.
#[derive(Debug, Clone)]
struct Best {
    value: f64,
    len: u64,
    subgraph: Vec<usize>,
    p1_hat: Option<f64>,
}

impl Best {
    fn beats(&self, value: f64, len: u64, subgraph: &[usize]) -> bool {
        value > self.value
            || (value == self.value
                && (len > self.len || (len == self.len && subgraph < self.subgraph.as_slice())))
    }
}

fn offer(best: &mut Option<Best>, value: f64, len: u64, subgraph: Vec<usize>, p1_hat: Option<f64>) {
    if best.as_ref().is_none_or(|b| b.beats(value, len, &subgraph)) {
        *best = Some(Best {
            value,
            len,
            subgraph,
            p1_hat,
        });
    }
}

fn to_report(time: u64, best: Option<Best>) -> StepReport {
    match best {
        None => StepReport::empty(time),
        Some(b) => StepReport {
            time,
            statistic: Some(b.value),
            change_point: Some(time - b.len + 1),
            subgraph: Some(b.subgraph),
            p1_hat: b.p1_hat,
        },
    }
}

/// Window-limited GLR detector (known or estimated `p1`).
#[derive(Debug, Clone)]
pub struct GlrDetector {
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Exhaustive(Box<ExhaustiveScan>),
    Greedy(Box<GreedyScan>),
}

impl GlrDetector {
    /// `p1` is required when `config.p1_mode` is [`P1Mode::Known`] and
    /// ignored otherwise.
    pub fn new(
        config: &GlrWindowConfig,
        candidates: &CandidateSet,
        p0: ErParams,
        p1: Option<ErParams>,
    ) -> Result<Self> {
        config.validate()?;
        let stat = match config.p1_mode {
            P1Mode::Known => {
                let p1 = p1.ok_or_else(|| Error::param("known-p1 GLR needs p1"))?;
                Statistic::Known(LlrWeights::new(p0, p1)?)
            }
            P1Mode::Mle(clamp) => Statistic::Mle { p0, clamp },
        };
        let inner = match (config.scan_mode, candidates.mode()) {
            (ScanMode::Greedy, _) => Inner::Greedy(Box::new(GreedyScan::new(config, candidates, stat))),
            (ScanMode::Exhaustive, ScanMode::Exhaustive) => {
                Inner::Exhaustive(Box::new(ExhaustiveScan::new(config, candidates, stat)?))
            }
            (ScanMode::Exhaustive, ScanMode::Greedy) => {
                return Err(Error::EnumerationCap {
                    num_nodes: candidates.num_nodes(),
                    size: candidates.community_size(),
                    count: candidates.count(),
                    cap: candidates.cap(),
                })
            }
        };
        Ok(Self { inner })
    }

    pub fn config(&self) -> &GlrWindowConfig {
        match &self.inner {
            Inner::Exhaustive(s) => &s.cfg,
            Inner::Greedy(s) => &s.cfg,
        }
    }
}

impl Detector for GlrDetector {
    fn observe_above(&mut self, graph: &GraphSnapshot, floor: f64) -> Result<Option<f64>> {
        match &mut self.inner {
            Inner::Exhaustive(s) => s.observe_above(graph, floor),
            Inner::Greedy(s) => s.observe_above(graph, floor),
        }
    }

    fn report(&self) -> StepReport {
        match &self.inner {
            Inner::Exhaustive(s) => s.report(),
            Inner::Greedy(s) => s.last.clone(),
        }
    }

    fn time(&self) -> u64 {
        match &self.inner {
            Inner::Exhaustive(s) => s.time,
            Inner::Greedy(s) => s.time,
        }
    }

    fn reset(&mut self) {
        match &mut self.inner {
            Inner::Exhaustive(s) => s.reset(),
            Inner::Greedy(s) => s.reset(),
        }
    }
}

fn check_nodes(graph: &GraphSnapshot, expected: usize) -> Result<()> {
    if graph.num_nodes() != expected {
        return Err(Error::param(format!(
            "snapshot has {} nodes, detector expects {expected}",
            graph.num_nodes()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct ExhaustiveScan {
    cfg: GlrWindowConfig,
    stat: Statistic,
    num_nodes: usize,
    size: usize,
    pairs_per: u64,
    num_candidates: usize,
    /// flattened sorted node lists, `size` entries per candidate
    nodes: Vec<u16>,
    /// CSR map from pair index to the candidates containing that pair
    member_start: Vec<u32>,
    members: Vec<u32>,
    /// slot-major ring of per-candidate edge counts; slot `(t−1) mod m`
    ring: Vec<u16>,
    slots: usize,
    /// unlimited CUSUM per candidate (known `p1` only)
    cusum: Vec<f64>,
    /// recent snapshots, kept only for the connectivity filter
    history: Option<VecDeque<GraphSnapshot>>,
    time: u64,
    last: Option<StepReport>,
}

impl ExhaustiveScan {
    fn new(cfg: &GlrWindowConfig, candidates: &CandidateSet, stat: Statistic) -> Result<Self> {
        let num_nodes = candidates.num_nodes();
        let size = candidates.community_size();
        if num_nodes > u16::MAX as usize {
            return Err(Error::param("exhaustive scan supports at most 65535 nodes"));
        }
        let d = usize::try_from(candidates.count())
            .ok()
            .filter(|&d| d <= u32::MAX as usize)
            .ok_or_else(|| Error::param("too many candidates"))?;
        let pairs_per = pairs_in(size);
        if pairs_per > u16::MAX as u64 {
            return Err(Error::param("community too large for 16-bit edge counters"));
        }
        let slots = usize::try_from(cfg.max_lookback)
            .ok()
            .filter(|&m| m.checked_mul(d).is_some_and(|x| x <= 1 << 32))
            .ok_or_else(|| Error::param("max_lookback too large for the exhaustive ring"))?;

        let p = pair_count(num_nodes);
        let mut nodes = Vec::with_capacity(d * size);
        let mut per_pair = vec![0u32; p + 1];
        for cand in Combinations::new(num_nodes, size) {
            for (a, &u) in cand.iter().enumerate() {
                for &v in &cand[a + 1..] {
                    per_pair[pair_index(num_nodes, u, v) + 1] += 1;
                }
            }
            nodes.extend(cand.iter().map(|&v| v as u16));
        }
        for i in 0..p {
            per_pair[i + 1] += per_pair[i];
        }
        let member_start = per_pair;
        let mut fill = member_start.clone();
        let mut members = vec![0u32; member_start[p] as usize];
        for c in 0..d {
            let cand = &nodes[c * size..(c + 1) * size];
            for (a, &u) in cand.iter().enumerate() {
                for &v in &cand[a + 1..] {
                    let pi = pair_index(num_nodes, u as usize, v as usize);
                    members[fill[pi] as usize] = c as u32;
                    fill[pi] += 1;
                }
            }
        }
        let history = candidates.connected_only().then(VecDeque::new);
        Ok(Self {
            cfg: cfg.clone(),
            stat,
            num_nodes,
            size,
            pairs_per,
            num_candidates: d,
            nodes,
            member_start,
            members,
            ring: vec![0; slots * d],
            slots,
            cusum: vec![0.0; d],
            history,
            time: 0,
            last: None,
        })
    }

    fn reset(&mut self) {
        self.ring.iter_mut().for_each(|x| *x = 0);
        self.cusum.iter_mut().for_each(|x| *x = 0.0);
        if let Some(h) = &mut self.history {
            h.clear();
        }
        self.time = 0;
        self.last = None;
    }

    fn candidate(&self, c: usize) -> Vec<usize> {
        self.nodes[c * self.size..(c + 1) * self.size]
            .iter()
            .map(|&v| v as usize)
            .collect()
    }

    #[inline]
    fn count_at(&self, len: u64, c: usize) -> u16 {
        // snapshot t − len + 1 lives in slot (t − len) mod m
        let slot = ((self.time - len) % self.slots as u64) as usize;
        self.ring[slot * self.num_candidates + c]
    }

    fn advance(&mut self, graph: &GraphSnapshot) -> Result<()> {
        check_nodes(graph, self.num_nodes)?;
        self.time += 1;
        self.last = None;
        let d = self.num_candidates;
        let slot = ((self.time - 1) % self.slots as u64) as usize;
        let row = &mut self.ring[slot * d..(slot + 1) * d];
        row.iter_mut().for_each(|x| *x = 0);
        for p in graph.present_pairs() {
            let (a, b) = (self.member_start[p] as usize, self.member_start[p + 1] as usize);
            for &c in &self.members[a..b] {
                row[c as usize] += 1;
            }
        }
        if let Statistic::Known(w) = self.stat {
            for (s, &e) in self.cusum.iter_mut().zip(row.iter()) {
                *s = s.max(0.0) + w.llr(e as u64, self.pairs_per);
            }
        }
        if let Some(h) = &mut self.history {
            h.push_front(graph.clone());
            h.truncate(self.slots);
        }
        Ok(())
    }

    /// Whether candidate `c` is connected through pairs present at least once
    /// in the last `len` snapshots.
    fn connected(&self, c: usize, len: u64) -> bool {
        let Some(history) = &self.history else {
            return true;
        };
        let nodes = self.candidate(c);
        let recent: Vec<&GraphSnapshot> = history.iter().take(len as usize).collect();
        let linked = |u: usize, v: usize| recent.iter().any(|g| g.has_edge(u, v));
        let mut reached = vec![false; nodes.len()];
        reached[0] = true;
        let mut stack = vec![0usize];
        while let Some(a) = stack.pop() {
            for b in 0..nodes.len() {
                if !reached[b] && linked(nodes[a], nodes[b]) {
                    reached[b] = true;
                    stack.push(b);
                }
            }
        }
        reached.into_iter().all(|r| r)
    }

    /// Best admissible window of candidate `c` whose value is at least
    /// `floor` (strictly above when `strict`); ties prefer longer windows.
    fn candidate_best(&self, c: usize, lo: u64, hi: u64, floor: f64, strict: bool) -> Option<(f64, u64, Option<f64>)> {
        let mut present = 0u64;
        let mut best: Option<(f64, u64, Option<f64>)> = None;
        for len in 1..=hi {
            present += self.count_at(len, c) as u64;
            if len < lo {
                continue;
            }
            let (v, q) = self.stat.eval(present, len * self.pairs_per);
            let above = if strict { v > floor } else { v >= floor };
            if !above || best.is_some_and(|(bv, _, _)| v < bv) {
                continue;
            }
            if !self.connected(c, len) {
                continue;
            }
            best = Some((v, len, q));
        }
        best
    }

    fn prunable(&self) -> bool {
        matches!(self.stat, Statistic::Known(_))
    }

    fn observe_above(&mut self, graph: &GraphSnapshot, floor: f64) -> Result<Option<f64>> {
        self.advance(graph)?;
        let Some((lo, hi)) = self.cfg.window_lengths(self.time) else {
            return Ok(None);
        };
        if !self.prunable() {
            let report = self.full_report();
            let above = report.statistic.filter(|&s| s > floor);
            self.last = Some(report);
            return Ok(above);
        }
        let mut best = floor;
        let mut found = false;
        for c in 0..self.num_candidates {
            if self.cusum[c] + BOUND_SLACK * (1.0 + self.cusum[c].abs()) <= best {
                continue;
            }
            if let Some((v, _, _)) = self.candidate_best(c, lo, hi, best, true) {
                best = v;
                found = true;
            }
        }
        Ok(found.then_some(best))
    }

    fn full_report(&self) -> StepReport {
        let Some((lo, hi)) = self.cfg.window_lengths(self.time) else {
            return StepReport::empty(self.time);
        };
        let prune = self.prunable();
        let mut best: Option<Best> = None;
        for c in 0..self.num_candidates {
            let floor = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.value);
            if prune && self.cusum[c] + BOUND_SLACK * (1.0 + self.cusum[c].abs()) < floor {
                continue;
            }
            if let Some((v, len, q)) = self.candidate_best(c, lo, hi, floor, false) {
                offer(&mut best, v, len, self.candidate(c), q);
            }
        }
        to_report(self.time, best)
    }

    fn report(&self) -> StepReport {
        match &self.last {
            Some(r) => r.clone(),
            None => self.full_report(),
        }
    }
}

#[derive(Debug, Clone)]
struct GreedyScan {
    cfg: GlrWindowConfig,
    stat: Statistic,
    num_nodes: usize,
    size: usize,
    pairs_per: u64,
    /// newest first
    history: VecDeque<(GraphSnapshot, Vec<u32>)>,
    acc_weights: Vec<u32>,
    acc_degrees: Vec<u64>,
    time: u64,
    last: StepReport,
}

impl GreedyScan {
    fn new(cfg: &GlrWindowConfig, candidates: &CandidateSet, stat: Statistic) -> Self {
        let n = candidates.num_nodes();
        Self {
            cfg: cfg.clone(),
            stat,
            num_nodes: n,
            size: candidates.community_size(),
            pairs_per: pairs_in(candidates.community_size()),
            history: VecDeque::new(),
            acc_weights: vec![0; pair_count(n)],
            acc_degrees: vec![0; n],
            time: 0,
            last: StepReport::empty(0),
        }
    }

    fn reset(&mut self) {
        self.history.clear();
        self.time = 0;
        self.last = StepReport::empty(0);
    }

    fn internal_weight(&self, subgraph: &[usize]) -> u64 {
        let n = self.num_nodes;
        let mut total = 0u64;
        for (a, &u) in subgraph.iter().enumerate() {
            for &v in &subgraph[a + 1..] {
                total += self.acc_weights[pair_index(n, u, v)] as u64;
            }
        }
        total
    }

    fn weight(&self, u: usize, v: usize) -> u64 {
        if u == v {
            return 0;
        }
        self.acc_weights[pair_index(self.num_nodes, u.min(v), u.max(v))] as u64
    }

    fn densest(&self) -> Vec<usize> {
        greedy_select(self.num_nodes, self.size, &self.acc_degrees, |u, v| self.weight(u, v))
    }

    fn sparsest(&self, len: u64) -> Vec<usize> {
        let span = len * (self.num_nodes as u64 - 1);
        let degrees: Vec<u64> = self.acc_degrees.iter().map(|&d| span - d).collect();
        greedy_select(self.num_nodes, self.size, &degrees, |u, v| {
            if u == v {
                0
            } else {
                len - self.weight(u, v)
            }
        })
    }

    fn observe_above(&mut self, graph: &GraphSnapshot, floor: f64) -> Result<Option<f64>> {
        check_nodes(graph, self.num_nodes)?;
        self.time += 1;
        let mut degrees = vec![0u32; self.num_nodes];
        for (i, j) in graph.edges() {
            degrees[i] += 1;
            degrees[j] += 1;
        }
        self.history.push_front((graph.clone(), degrees));
        self.history.truncate(self.cfg.max_lookback as usize);

        let Some((lo, hi)) = self.cfg.window_lengths(self.time) else {
            self.last = StepReport::empty(self.time);
            return Ok(None);
        };
        self.acc_weights.iter_mut().for_each(|w| *w = 0);
        self.acc_degrees.iter_mut().for_each(|d| *d = 0);
        let mut best: Option<Best> = None;
        for len in 1..=hi {
            let (g, deg) = &self.history[(len - 1) as usize];
            for p in g.present_pairs() {
                self.acc_weights[p] += 1;
            }
            for (acc, &d) in self.acc_degrees.iter_mut().zip(deg) {
                *acc += d as u64;
            }
            if len < lo {
                continue;
            }
            let slots = len * self.pairs_per;
            let picks = match self.stat {
                Statistic::Known(w) if w.favours_density() => vec![self.densest()],
                Statistic::Known(_) => vec![self.sparsest(len)],
                Statistic::Mle { .. } => vec![self.densest(), self.sparsest(len)],
            };
            for v in picks {
                let (value, q) = self.stat.eval(self.internal_weight(&v), slots);
                offer(&mut best, value, len, v, q);
            }
        }
        self.last = to_report(self.time, best);
        Ok(self.last.statistic.filter(|&s| s > floor))
    }
}
