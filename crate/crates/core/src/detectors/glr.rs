use super::{Clamp, GlrWindowConfig, P1Mode};
use crate::error::{Error, Result};
use crate::graph::{validate_subgraph, ErParams};
use crate::likelihood::{pairs_in, EdgeCountMatrix, LlrWeights};
use crate::scan::{best_subgraph, greedy_densest, CandidateSet, ScanMode, ScanResult, WeightedPairGraph};

/// Scan statistic at one time with its maximisers.
#[derive(Debug, Clone, PartialEq)]
pub struct GlrOutcome {
    /// `−∞` when no window is admissible.
    pub statistic: f64,
    pub change_point: Option<u64>,
    pub subgraph: Option<Vec<usize>>,
    pub p1_hat: Option<f64>,
    pub alarm: bool,
}

impl GlrOutcome {
    fn none() -> Self {
        Self {
            statistic: f64::NEG_INFINITY,
            change_point: None,
            subgraph: None,
            p1_hat: None,
            alarm: false,
        }
    }
}

fn effective_candidates(config: &GlrWindowConfig, candidates: &CandidateSet) -> Result<CandidateSet> {
    match (config.scan_mode, candidates.mode()) {
        (ScanMode::Greedy, _) => Ok(candidates.clone().into_greedy()),
        (ScanMode::Exhaustive, ScanMode::Exhaustive) => Ok(candidates.clone()),
        (ScanMode::Exhaustive, ScanMode::Greedy) => Err(Error::EnumerationCap {
            num_nodes: candidates.num_nodes(),
            size: candidates.community_size(),
            count: candidates.count(),
            cap: candidates.cap(),
        }),
    }
}

/// Window-limited GLR statistic with known `p1`, evaluated directly from
/// prefix counts: `max_k max_V R_{t,k,V}` over admissible `k`.
pub fn glr_step(
    counts: &EdgeCountMatrix,
    t: u64,
    config: &GlrWindowConfig,
    weights: &LlrWeights,
    candidates: &CandidateSet,
) -> Result<GlrOutcome> {
    config.validate()?;
    let cands = effective_candidates(config, candidates)?;
    let Some((lo, hi)) = config.window_lengths(t) else {
        return Ok(GlrOutcome::none());
    };
    let mut out = GlrOutcome::none();
    // k ascending so that strict improvement keeps the smallest k on ties
    for len in (lo..=hi).rev() {
        let k = t - len + 1;
        let w = counts.window_weights(k, t)?;
        if let Some(ScanResult { subgraph, statistic }) = best_subgraph(&w, &cands, weights, len)? {
            if out.change_point.is_none() || statistic > out.statistic {
                out.statistic = statistic;
                out.change_point = Some(k);
                out.subgraph = Some(subgraph);
            }
        }
    }
    out.alarm = out.statistic > config.threshold;
    Ok(out)
}

/// Per-window MLE of `p1` over `subgraph`, clamped to `[ε, 1 − ε]`.
pub fn mle_p1(
    counts: &EdgeCountMatrix,
    start: u64,
    end: u64,
    subgraph: &[usize],
    clamp: Clamp,
) -> Result<f64> {
    validate_subgraph(counts.num_nodes(), subgraph)?;
    if subgraph.len() < 2 {
        return Err(Error::InvalidSubgraph("need at least 2 nodes".into()));
    }
    let present = counts.window_edges_within(start, end, subgraph)?;
    let slots = (end - start + 1) * pairs_in(subgraph.len());
    Ok(clamped_rate(present, slots, clamp))
}

pub(crate) fn clamped_rate(present: u64, slots: u64, clamp: Clamp) -> f64 {
    let eps = clamp.epsilon(slots);
    (present as f64 / slots as f64).clamp(eps, 1.0 - eps)
}

/// `U` for a window with `present` edges out of `slots` pair-time
/// observations: the LLR with the (clamped) MLE plugged in for `p1`.
/// Returns `(U, p̂1)`.
pub fn plug_in_statistic(present: u64, slots: u64, p0: ErParams, clamp: Clamp) -> (f64, f64) {
    let q = clamped_rate(present, slots, clamp);
    let p = p0.p();
    let u = present as f64 * (q / p).ln() + (slots - present) as f64 * ((1.0 - q) / (1.0 - p)).ln();
    (u, q)
}

/// Window-limited GLR statistic with `p1` replaced by its per-window MLE.
pub fn glr_unknown_p1_step(
    counts: &EdgeCountMatrix,
    t: u64,
    config: &GlrWindowConfig,
    p0: ErParams,
    candidates: &CandidateSet,
) -> Result<GlrOutcome> {
    config.validate()?;
    let P1Mode::Mle(clamp) = config.p1_mode else {
        return Err(Error::param("glr_unknown_p1_step requires p1_mode = mle"));
    };
    let cands = effective_candidates(config, candidates)?;
    let Some((lo, hi)) = config.window_lengths(t) else {
        return Ok(GlrOutcome::none());
    };
    let n = cands.community_size();
    let mut out = GlrOutcome::none();
    for len in (lo..=hi).rev() {
        let k = t - len + 1;
        let w = counts.window_weights(k, t)?;
        let slots = len * pairs_in(n);
        let mut consider = |subgraph: Vec<usize>, w: &WeightedPairGraph| {
            let (u, q) = plug_in_statistic(w.internal_weight(&subgraph), slots, p0, clamp);
            let better = match out.change_point {
                None => true,
                Some(bk) if bk == k => {
                    u > out.statistic
                        || (u == out.statistic
                            && out.subgraph.as_ref().is_some_and(|s| subgraph < *s))
                }
                Some(_) => u > out.statistic,
            };
            if better {
                out.statistic = u;
                out.change_point = Some(k);
                out.subgraph = Some(subgraph);
                out.p1_hat = Some(q);
            }
        };
        match cands.iter() {
            Some(iter) => {
                for cand in iter {
                    if cands.connected_only() && !w.is_connected_within(&cand) {
                        continue;
                    }
                    consider(cand, &w);
                }
            }
            None => {
                let len32 = u32::try_from(len).map_err(|_| Error::param("window too long"))?;
                consider(greedy_densest(&w, n), &w);
                consider(greedy_densest(&w.complement(len32), n), &w);
            }
        }
    }
    out.alarm = out.statistic > config.threshold;
    Ok(out)
}

/// Most likely changed subgraph for the window `[k, t]`.
pub fn localize(
    counts: &EdgeCountMatrix,
    k: u64,
    t: u64,
    candidates: &CandidateSet,
    weights: &LlrWeights,
) -> Result<Option<ScanResult>> {
    let w = counts.window_weights(k, t)?;
    best_subgraph(&w, candidates, weights, t - k + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ChangePoint, ChangeScenario, RandomSource, sample_sequence};
    use crate::likelihood::{bernoulli_kl, window_llr};
    use crate::scan::enumerate_candidates;

    fn er(p: f64) -> ErParams {
        ErParams::new(p).unwrap()
    }

    fn counts(n: usize, n_comm: usize, horizon: usize, seed: u64) -> EdgeCountMatrix {
        let s = ChangeScenario::with_leading_community(n, n_comm, 0.25, 0.6, ChangePoint::At(4)).unwrap();
        let g = sample_sequence(&s, horizon, RandomSource::new(seed)).unwrap();
        EdgeCountMatrix::from_snapshots(&g).unwrap()
    }

    #[test]
    fn no_admissible_window_before_min_lookback() {
        let c = counts(7, 3, 5, 1);
        let w = LlrWeights::new(er(0.25), er(0.6)).unwrap();
        let cfg = GlrWindowConfig::new(3, 6, 1.0, ScanMode::Exhaustive, P1Mode::Known).unwrap();
        let cands = enumerate_candidates(7, 3, 1_000).unwrap();
        let out = glr_step(&c, 2, &cfg, &w, &cands).unwrap();
        assert_eq!(out.statistic, f64::NEG_INFINITY);
        assert!(!out.alarm && out.change_point.is_none());
    }

    #[test]
    fn single_window_matches_direct_maximisation() {
        let c = counts(8, 3, 6, 2);
        let w = LlrWeights::new(er(0.25), er(0.6)).unwrap();
        let cands = enumerate_candidates(8, 3, 1_000).unwrap();
        // max_lookback 2 and t = 1 leave only k = 1
        let cfg = GlrWindowConfig::new(1, 2, 0.0, ScanMode::Exhaustive, P1Mode::Known).unwrap();
        let out = glr_step(&c, 1, &cfg, &w, &cands).unwrap();
        let direct = cands
            .iter()
            .unwrap()
            .map(|v| window_llr(&c, 1, 1, &v, &w).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.statistic, direct);
        assert_eq!(out.change_point, Some(1));
    }

    #[test]
    fn mle_rate_and_clamp() {
        let g = vec![crate::graph::GraphSnapshot::complete(5); 4];
        let c = EdgeCountMatrix::from_snapshots(&g).unwrap();
        let q = mle_p1(&c, 1, 4, &[0, 1, 2], Clamp::Fixed(0.01)).unwrap();
        assert!((q - 0.99).abs() < 1e-15);
        let half = vec![
            crate::graph::GraphSnapshot::complete(4),
            crate::graph::GraphSnapshot::empty(4),
        ];
        let c = EdgeCountMatrix::from_snapshots(&half).unwrap();
        assert_eq!(mle_p1(&c, 1, 2, &[0, 1, 3], Clamp::HalfCount).unwrap(), 0.5);
    }

    #[test]
    fn plug_in_statistic_is_zero_at_null_rate() {
        // 10 pairs over 5 steps = 50 slots; 10 present is rate 0.2
        let (u, q) = plug_in_statistic(10, 50, er(0.2), Clamp::HalfCount);
        assert!(u.abs() < 1e-12);
        assert_eq!(q, 0.2);
        let (u, q) = plug_in_statistic(23, 50, er(0.2), Clamp::HalfCount);
        let kl = 50.0 * bernoulli_kl(q, 0.2).unwrap();
        assert!(((u - kl) / kl).abs() < 1e-10);
    }

    #[test]
    fn unknown_p1_requires_mle_mode() {
        let c = counts(7, 3, 5, 3);
        let cands = enumerate_candidates(7, 3, 1_000).unwrap();
        let cfg = GlrWindowConfig::new(1, 3, 1.0, ScanMode::Exhaustive, P1Mode::Known).unwrap();
        assert!(glr_unknown_p1_step(&c, 5, &cfg, er(0.25), &cands).is_err());
    }

    #[test]
    fn exhaustive_over_cap_is_rejected() {
        let c = counts(9, 4, 3, 4);
        let w = LlrWeights::new(er(0.25), er(0.6)).unwrap();
        let cands = enumerate_candidates(9, 4, 10).unwrap();
        let cfg = GlrWindowConfig::new(1, 3, 1.0, ScanMode::Exhaustive, P1Mode::Known).unwrap();
        assert!(glr_step(&c, 3, &cfg, &w, &cands).is_err());
        let greedy = GlrWindowConfig { scan_mode: ScanMode::Greedy, ..cfg };
        assert!(glr_step(&c, 3, &greedy, &w, &cands).unwrap().statistic.is_finite());
    }
}
