use std::borrow::Borrow;

use super::{run_to_alarm, Detector, RunOutcome, StepReport};
use crate::error::{Error, Result};
use crate::graph::{pair_index, GraphSnapshot};
use crate::likelihood::{pairs_in, LlrWeights};
use crate::scan::normalize_subgraph;

/// CUSUM over the oracle LLR of a known community:
/// `S_t = max(S_{t−1}, 0) + ℓ_V(G(t))`, alarm when `S_t > b`.
///
/// `S_t` itself may be negative; the reflection is applied to the previous
/// value. The segment start (`k̂`) moves to `t` whenever `S_{t−1} < 0`.
#[derive(Debug, Clone)]
pub struct CusumState {
    pub statistic: f64,
    pub time: u64,
    pub threshold: f64,
    target: Vec<usize>,
    weights: LlrWeights,
    num_nodes: usize,
    target_pairs: Vec<usize>,
    segment_start: u64,
}

/// The CUSUM state doubles as the detector.
pub type CusumDetector = CusumState;

impl CusumState {
    pub fn new(num_nodes: usize, target: &[usize], weights: LlrWeights, threshold: f64) -> Result<Self> {
        if threshold.is_nan() || threshold <= 0.0 {
            return Err(Error::param(format!("CUSUM threshold must be > 0; got {threshold}")));
        }
        if target.len() < 2 {
            return Err(Error::InvalidSubgraph("target subgraph needs at least 2 nodes".into()));
        }
        let target = normalize_subgraph(num_nodes, target)?;
        let mut target_pairs = Vec::new();
        for (a, &u) in target.iter().enumerate() {
            for &v in &target[a + 1..] {
                target_pairs.push(pair_index(num_nodes, u, v));
            }
        }
        Ok(Self {
            statistic: 0.0,
            time: 0,
            threshold,
            target,
            weights,
            num_nodes,
            target_pairs,
            segment_start: 1,
        })
    }

    pub fn target_subgraph(&self) -> &[usize] {
        &self.target
    }

    pub fn weights(&self) -> &LlrWeights {
        &self.weights
    }

    fn advance(&mut self, graph: &GraphSnapshot) -> Result<()> {
        if graph.num_nodes() != self.num_nodes {
            return Err(Error::param(format!(
                "snapshot has {} nodes, detector expects {}",
                graph.num_nodes(),
                self.num_nodes
            )));
        }
        let present = self.target_pairs.iter().filter(|&&p| graph.has_pair(p)).count() as u64;
        let increment = self.weights.llr(present, pairs_in(self.target.len()));
        self.time += 1;
        if self.statistic < 0.0 {
            self.segment_start = self.time;
        }
        self.statistic = self.statistic.max(0.0) + increment;
        Ok(())
    }

    /// One recursion step; returns the alarm flag.
    pub fn cusum_step(&mut self, graph: &GraphSnapshot) -> Result<bool> {
        self.advance(graph)?;
        Ok(self.statistic > self.threshold)
    }
}

impl Detector for CusumState {
    fn observe_above(&mut self, graph: &GraphSnapshot, floor: f64) -> Result<Option<f64>> {
        self.advance(graph)?;
        Ok((self.statistic > floor).then_some(self.statistic))
    }

    fn report(&self) -> StepReport {
        if self.time == 0 {
            return StepReport::empty(0);
        }
        StepReport {
            time: self.time,
            statistic: Some(self.statistic),
            change_point: Some(self.segment_start),
            subgraph: Some(self.target.clone()),
            p1_hat: None,
        }
    }

    fn time(&self) -> u64 {
        self.time
    }

    fn reset(&mut self) {
        self.statistic = 0.0;
        self.time = 0;
        self.segment_start = 1;
    }
}

/// Runs a fresh CUSUM over `stream` with the state's threshold.
pub fn run_cusum<I>(state: &mut CusumState, stream: I) -> Result<RunOutcome>
where
    I: IntoIterator,
    I::Item: Borrow<GraphSnapshot>,
{
    let b = state.threshold;
    run_to_alarm(state, stream, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ErParams;

    fn weights() -> LlrWeights {
        LlrWeights::new(ErParams::new(0.2).unwrap(), ErParams::new(0.5).unwrap()).unwrap()
    }

    #[test]
    fn empty_community_snapshot_goes_negative() {
        let mut s = CusumState::new(8, &[0, 1, 2, 3, 4], weights(), 5.0).unwrap();
        let alarm = s.cusum_step(&GraphSnapshot::empty(8)).unwrap();
        assert!(!alarm);
        assert!((s.statistic + 4.700_036_292_457_36).abs() < 1e-9);
        // reflected at the next step
        let full = GraphSnapshot::complete(8);
        s.cusum_step(&full).unwrap();
        assert!((s.statistic - 9.162_907_318_741_55).abs() < 1e-9);
        assert_eq!(s.report().change_point, Some(2));
    }

    #[test]
    fn full_community_snapshot_alarms() {
        let mut s = CusumState::new(8, &[4, 3, 2, 1, 0], weights(), 5.0).unwrap();
        assert!(s.cusum_step(&GraphSnapshot::complete(8)).unwrap());
        assert!((s.statistic - 9.162_907_318_741_55).abs() < 1e-9);
    }

    #[test]
    fn run_reports_censoring_and_empty_stream() {
        let mut s = CusumState::new(6, &[0, 1, 2], weights(), 50.0).unwrap();
        let stream = vec![GraphSnapshot::empty(6); 4];
        assert_eq!(
            run_cusum(&mut s, &stream).unwrap(),
            RunOutcome::Censored { horizon: 4 }
        );
        let mut s = CusumState::new(6, &[0, 1, 2], weights(), 50.0).unwrap();
        let none: Vec<GraphSnapshot> = Vec::new();
        assert!(matches!(run_cusum(&mut s, &none), Err(Error::EmptyStream)));
    }

    #[test]
    fn tiny_threshold_stops_on_first_positive_increment() {
        let mut s = CusumState::new(6, &[0, 1, 2], weights(), 1e-12).unwrap();
        let g = GraphSnapshot::from_edges(6, &[(0, 1), (1, 2)]).unwrap();
        // 2·ln2.5 − ln1.6 > 0
        let out = run_cusum(&mut s, [g]).unwrap();
        assert_eq!(out.time(), 1);
        assert!(out.is_alarm());
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(CusumState::new(6, &[0, 1], weights(), 0.0).is_err());
        assert!(CusumState::new(6, &[0], weights(), 1.0).is_err());
        assert!(CusumState::new(6, &[0, 6], weights(), 1.0).is_err());
        let mut s = CusumState::new(6, &[0, 1], weights(), 1.0).unwrap();
        assert!(s.cusum_step(&GraphSnapshot::empty(7)).is_err());
    }
}
