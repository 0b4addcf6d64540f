//! Online stopping rules.
//!
//! - [`CusumDetector`]: Page's recursion on the oracle LLR of a known community.
//! - [`GlrDetector`]: window-limited GLR scan over candidate subgraphs, with a
//!   known post-change probability or its per-window MLE.
//! - [`glr_step`], [`glr_unknown_p1_step`], [`localize`]: direct evaluations
//!   from an [`EdgeCountMatrix`](crate::likelihood::EdgeCountMatrix), used for
//!   localization and as the reference the incremental scanners are tested
//!   against.
//!
//! Window convention: at time `t` the admissible change-point estimates are
//! `k = t − L + 1` for window lengths `L ∈ [min_lookback, max_lookback]`,
//! `k ≥ 1`. Ties prefer the smallest `k`, then the lexicographically smallest
//! subgraph.

mod cusum;
mod glr;
mod scanner;

use std::borrow::Borrow;
use std::fmt;
use std::str::FromStr;

pub use cusum::{run_cusum, CusumDetector, CusumState};
pub use glr::{
    glr_step, glr_unknown_p1_step, localize, mle_p1, plug_in_statistic, GlrOutcome,
};
pub use scanner::GlrDetector;

use crate::error::{Error, Result};
use crate::graph::GraphSnapshot;
use crate::scan::ScanMode;

/// Clamp applied to the post-change MLE so its logarithms stay finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clamp {
    /// `ε = 1 / (2·L·C(n,2))`: half a count over the window's pair slots.
    HalfCount,
    Fixed(f64),
}

impl Clamp {
    pub fn epsilon(self, slots: u64) -> f64 {
        match self {
            Clamp::HalfCount => 0.5 / slots as f64,
            Clamp::Fixed(eps) => eps,
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            Clamp::Fixed(eps) if !(eps > 0.0 && eps < 0.5) => Err(Error::param(format!(
                "MLE clamp must lie in (0, 0.5); got {eps}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Whether the post-change edge probability is known or estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum P1Mode {
    Known,
    Mle(Clamp),
}

/// Window-limited GLR parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GlrWindowConfig {
    pub min_lookback: u64,
    pub max_lookback: u64,
    pub threshold: f64,
    pub scan_mode: ScanMode,
    pub p1_mode: P1Mode,
}

impl GlrWindowConfig {
    pub fn new(
        min_lookback: u64,
        max_lookback: u64,
        threshold: f64,
        scan_mode: ScanMode,
        p1_mode: P1Mode,
    ) -> Result<Self> {
        let cfg = Self {
            min_lookback,
            max_lookback,
            threshold,
            scan_mode,
            p1_mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_lookback < 1 {
            return Err(Error::param("min_lookback must be >= 1"));
        }
        if self.max_lookback <= self.min_lookback {
            return Err(Error::param(format!(
                "max_lookback ({}) must exceed min_lookback ({})",
                self.max_lookback, self.min_lookback
            )));
        }
        if self.threshold.is_nan() {
            return Err(Error::param("threshold must be a number"));
        }
        if let P1Mode::Mle(clamp) = self.p1_mode {
            clamp.validate()?;
        }
        Ok(())
    }

    /// Admissible window lengths at time `t`, if any.
    pub fn window_lengths(&self, t: u64) -> Option<(u64, u64)> {
        let hi = self.max_lookback.min(t);
        (self.min_lookback <= hi).then_some((self.min_lookback, hi))
    }
}

/// Window rule `m_α = ⌈4·b / I⌉`, never below `min_lookback + 1`.
pub fn default_max_lookback(threshold: f64, information: f64, min_lookback: u64) -> u64 {
    let m = (4.0 * threshold / information).ceil();
    let m = if m.is_finite() && m > 0.0 { m as u64 } else { 0 };
    m.max(min_lookback + 1)
}

/// Which stopping rule a detector implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Cusum,
    Glr,
    GlrMle,
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorKind::Cusum => "cusum",
            DetectorKind::Glr => "glr",
            DetectorKind::GlrMle => "glr-mle",
        })
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cusum" => Ok(DetectorKind::Cusum),
            "glr" => Ok(DetectorKind::Glr),
            "glr-mle" => Ok(DetectorKind::GlrMle),
            other => Err(Error::param(format!(
                "detector must be `cusum`, `glr` or `glr-mle`; got {other:?}"
            ))),
        }
    }
}

/// Statistic and maximisers at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub time: u64,
    /// `None` before the first admissible window.
    pub statistic: Option<f64>,
    pub change_point: Option<u64>,
    pub subgraph: Option<Vec<usize>>,
    pub p1_hat: Option<f64>,
}

impl StepReport {
    pub(crate) fn empty(time: u64) -> Self {
        Self {
            time,
            statistic: None,
            change_point: None,
            subgraph: None,
            p1_hat: None,
        }
    }

    pub fn exceeds(&self, threshold: f64) -> bool {
        self.statistic.is_some_and(|s| s > threshold)
    }
}

/// A raised alarm.
#[derive(Debug, Clone, PartialEq)]
pub struct Alarm {
    pub stop_time: u64,
    pub estimated_change_point: u64,
    pub estimated_subgraph: Vec<usize>,
    pub statistic_at_stop: f64,
    pub estimated_p1: Option<f64>,
}

impl Alarm {
    fn from_report(report: StepReport) -> Self {
        Self {
            stop_time: report.time,
            estimated_change_point: report.change_point.unwrap_or(report.time),
            estimated_subgraph: report.subgraph.unwrap_or_default(),
            statistic_at_stop: report.statistic.unwrap_or(f64::NEG_INFINITY),
            estimated_p1: report.p1_hat,
        }
    }
}

/// Result of running a stopping rule over a finite stream.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Alarm(Alarm),
    Censored { horizon: u64 },
}

impl RunOutcome {
    /// Stopping time, or the horizon when censored.
    pub fn time(&self) -> u64 {
        match self {
            RunOutcome::Alarm(a) => a.stop_time,
            RunOutcome::Censored { horizon } => *horizon,
        }
    }

    pub fn is_alarm(&self) -> bool {
        matches!(self, RunOutcome::Alarm(_))
    }
}

/// A sequential detection statistic fed one snapshot at a time.
pub trait Detector: Send {
    /// Advances one step. Returns the new statistic only when it strictly
    /// exceeds `floor`; implementations may skip work that cannot beat it.
    fn observe_above(&mut self, graph: &GraphSnapshot, floor: f64) -> Result<Option<f64>>;

    /// Full statistic with maximisers at the current time.
    fn report(&self) -> StepReport;

    /// Number of snapshots consumed.
    fn time(&self) -> u64;

    /// Forgets all history.
    fn reset(&mut self);

    fn observe(&mut self, graph: &GraphSnapshot) -> Result<StepReport> {
        self.observe_above(graph, f64::INFINITY)?;
        Ok(self.report())
    }
}

/// Feeds `stream` until the statistic exceeds `threshold`.
pub fn run_to_alarm<D, I>(detector: &mut D, stream: I, threshold: f64) -> Result<RunOutcome>
where
    D: Detector + ?Sized,
    I: IntoIterator,
    I::Item: std::borrow::Borrow<GraphSnapshot>,
{
    let mut seen = false;
    for g in stream {
        seen = true;
        if detector.observe_above(g.borrow(), threshold)?.is_some() {
            return Ok(RunOutcome::Alarm(Alarm::from_report(detector.report())));
        }
    }
    if !seen {
        return Err(Error::EmptyStream);
    }
    Ok(RunOutcome::Censored {
        horizon: detector.time(),
    })
}
