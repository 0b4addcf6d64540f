//! Monte Carlo evaluation: run lengths, calibration and false-alarm checks.
//!
//! Every replication records the times at which the running maximum of its
//! detection statistic strictly increases. Because a stopping time is the
//! first time the statistic exceeds `b`, which is the first such record above
//! `b`, one pass over a path yields its stopping time for every threshold up
//! to the level at which the path was stopped. Curves over a threshold grid
//! therefore use common random numbers, and calibration bisects on `b`
//! without re-simulating.
//!
//! Replication `r` draws from stream `r` of the master seed, so results do not
//! depend on the number of worker threads.

use std::io::Write;

use rayon::prelude::*;

use crate::detectors::{CusumState, Detector, GlrDetector, GlrWindowConfig, P1Mode};
use crate::error::{Error, Result};
use crate::graph::{ChangePoint, ChangeScenario, GraphSnapshot, RandomSource, ScenarioSampler};
use crate::likelihood::LlrWeights;
use crate::scan::{ln_binomial, CandidateSet, ScanMode};

/// A detector recipe that can be instantiated once per worker.
#[derive(Debug, Clone)]
pub enum DetectorConfig {
    /// CUSUM with the community known in advance.
    Cusum { target: Vec<usize> },
    /// Window-limited GLR scan; the window's threshold field is ignored here.
    Glr {
        window: GlrWindowConfig,
        candidates: CandidateSet,
    },
}

impl DetectorConfig {
    pub fn label(&self) -> String {
        match self {
            DetectorConfig::Cusum { .. } => "cusum".to_owned(),
            DetectorConfig::Glr { window, .. } => match window.p1_mode {
                P1Mode::Known => format!("glr-{}", window.scan_mode),
                P1Mode::Mle(_) => format!("glr-mle-{}", window.scan_mode),
            },
        }
    }

    /// Earliest time the statistic exists.
    pub fn min_stop_time(&self) -> u64 {
        match self {
            DetectorConfig::Cusum { .. } => 1,
            DetectorConfig::Glr { window, .. } => window.min_lookback,
        }
    }

    /// Number of candidate subgraphs scanned (1 for CUSUM).
    pub fn scan_size(&self) -> f64 {
        match self {
            DetectorConfig::Cusum { .. } => 1.0,
            DetectorConfig::Glr { candidates, .. } => candidates.count() as f64,
        }
    }

    pub fn build(&self, scenario: &ChangeScenario) -> Result<Box<dyn Detector>> {
        let (p0, p1) = (scenario.p0(), scenario.p1());
        match self {
            DetectorConfig::Cusum { target } => {
                let w = LlrWeights::new(p0, p1)?;
                Ok(Box::new(CusumState::new(scenario.num_nodes(), target, w, f64::MAX)?))
            }
            DetectorConfig::Glr { window, candidates } => {
                let mut cfg = window.clone();
                if !cfg.threshold.is_finite() {
                    cfg.threshold = 0.0;
                }
                Ok(Box::new(GlrDetector::new(&cfg, candidates, p0, Some(p1))?))
            }
        }
    }
}

/// Record times of one path's running maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct RunProfile {
    /// `(t, value)` with strictly increasing values.
    records: Vec<(u64, f64)>,
    /// Last simulated time.
    end: u64,
}

impl RunProfile {
    /// Stopping time for threshold `b` and whether it was censored at the
    /// horizon. Valid for `b` up to the level the path was simulated to.
    pub fn stopping_time(&self, b: f64) -> (u64, bool) {
        match self.records.iter().find(|&&(_, v)| v > b) {
            Some(&(t, _)) => (t, false),
            None => (self.end, true),
        }
    }

    pub fn max_statistic(&self) -> f64 {
        self.records.last().map_or(f64::NEG_INFINITY, |&(_, v)| v)
    }

    fn first_value(&self) -> Option<f64> {
        self.records.first().map(|&(_, v)| v)
    }
}

/// Runs `detector` on `sampler` until the statistic exceeds `stop_above` or
/// `horizon` steps have been taken.
pub fn simulate_profile(
    detector: &mut dyn Detector,
    sampler: &mut ScenarioSampler,
    num_nodes: usize,
    stop_above: f64,
    horizon: u64,
) -> Result<RunProfile> {
    detector.reset();
    let mut g = GraphSnapshot::empty(num_nodes);
    let mut running = f64::NEG_INFINITY;
    let mut records = Vec::new();
    for t in 1..=horizon {
        sampler.fill_next(&mut g);
        if let Some(v) = detector.observe_above(&g, running)? {
            running = v;
            records.push((t, v));
            if v > stop_above {
                return Ok(RunProfile { records, end: t });
            }
        }
    }
    Ok(RunProfile {
        records,
        end: horizon,
    })
}

/// Mean run length with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLengthEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replications: usize,
    /// Fraction of runs that hit the horizon; when positive the mean is a
    /// lower bound.
    pub censored_fraction: f64,
}

impl RunLengthEstimate {
    pub fn from_samples(samples: &[f64], censored: usize) -> Self {
        let r = samples.len();
        let mean = samples.iter().sum::<f64>() / r as f64;
        let var = if r > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / r as f64).sqrt(),
            replications: r,
            censored_fraction: censored as f64 / r as f64,
        }
    }

    pub fn is_lower_bound(&self) -> bool {
        self.censored_fraction > 0.0
    }
}

/// Profiles of independent replications sharing one stopping level.
#[derive(Clone)]
pub struct ProfileSet {
    profiles: Vec<RunProfile>,
    stop_above: f64,
    horizon: u64,
}

impl std::fmt::Debug for ProfileSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProfileSet")
            .field("replications", &self.profiles.len())
            .field("stop_above", &self.stop_above)
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl ProfileSet {
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[RunProfile] {
        &self.profiles
    }

    /// Largest threshold this set can answer.
    pub fn max_threshold(&self) -> f64 {
        self.stop_above
    }

    /// Per-replication stopping times at threshold `b`.
    pub fn stopping_times(&self, b: f64) -> Vec<(u64, bool)> {
        assert!(
            b <= self.stop_above,
            "threshold {b} above simulated level {}",
            self.stop_above
        );
        self.profiles.iter().map(|p| p.stopping_time(b)).collect()
    }

    /// Mean stopping time at threshold `b`.
    pub fn estimate(&self, b: f64) -> RunLengthEstimate {
        let times = self.stopping_times(b);
        let censored = times.iter().filter(|&&(_, c)| c).count();
        let samples: Vec<f64> = times.iter().map(|&(t, _)| t as f64).collect();
        RunLengthEstimate::from_samples(&samples, censored)
    }

    /// A threshold below every recorded statistic; `estimate` there returns
    /// the minimum admissible stopping time.
    fn floor_threshold(&self) -> f64 {
        let lowest = self
            .profiles
            .iter()
            .filter_map(RunProfile::first_value)
            .fold(f64::INFINITY, f64::min);
        if lowest.is_finite() {
            lowest - 1.0
        } else {
            -1.0
        }
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }
}

/// Simulates `replications` profiles of `config` under `scenario`.
pub fn simulate_profiles(
    config: &DetectorConfig,
    scenario: &ChangeScenario,
    replications: usize,
    horizon: u64,
    stop_above: f64,
    seed: u64,
) -> Result<ProfileSet> {
    if replications == 0 || horizon == 0 {
        return Err(Error::param("replications and horizon must be >= 1"));
    }
    let template = config.build(scenario)?;
    drop(template);
    let profiles = (0..replications as u64)
        .into_par_iter()
        .map_init(
            || config.build(scenario).expect("validated above"),
            |det, r| {
                let mut sampler = ScenarioSampler::new(scenario, RandomSource::for_replication(seed, r));
                simulate_profile(det.as_mut(), &mut sampler, scenario.num_nodes(), stop_above, horizon)
            },
        )
        .collect::<Result<Vec<_>>>()?;
    Ok(ProfileSet {
        profiles,
        stop_above,
        horizon,
    })
}

/// ARL: mean stopping time on change-free streams, runs censored at `horizon`.
pub fn estimate_arl(
    config: &DetectorConfig,
    scenario: &ChangeScenario,
    threshold: f64,
    replications: usize,
    horizon: u64,
    seed: u64,
) -> Result<RunLengthEstimate> {
    let null = scenario.with_change_point(ChangePoint::Never);
    Ok(simulate_profiles(config, &null, replications, horizon, threshold, seed)?.estimate(threshold))
}

/// EDD surrogate `E_1[T]`: mean stopping time with the change active from
/// the first snapshot. Lorden's worst-case delay is not estimated.
pub fn estimate_edd(
    config: &DetectorConfig,
    scenario: &ChangeScenario,
    threshold: f64,
    replications: usize,
    horizon: u64,
    seed: u64,
) -> Result<RunLengthEstimate> {
    let post = scenario.with_change_point(ChangePoint::At(1));
    Ok(simulate_profiles(config, &post, replications, horizon, threshold, seed)?.estimate(threshold))
}

/// Threshold calibration outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub alpha: Option<f64>,
    pub b_analytic: Option<f64>,
    pub b_empirical: Option<f64>,
    pub target_arl: Option<f64>,
    /// In-sample ARL at `b_empirical`.
    pub arl_estimate: Option<RunLengthEstimate>,
}

/// `b = log(2·m_α·C(N,n)/α)`.
pub fn analytic_threshold(alpha: f64, max_lookback: u64, num_nodes: usize, community_size: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0, 1); got {alpha}")));
    }
    if max_lookback == 0 {
        return Err(Error::param("max_lookback must be >= 1"));
    }
    Ok(std::f64::consts::LN_2 + (max_lookback as f64).ln() + ln_binomial(num_nodes, community_size)
        - alpha.ln())
}

pub fn calibrate_analytic(
    alpha: f64,
    max_lookback: u64,
    num_nodes: usize,
    community_size: usize,
) -> Result<CalibrationResult> {
    Ok(CalibrationResult {
        alpha: Some(alpha),
        b_analytic: Some(analytic_threshold(alpha, max_lookback, num_nodes, community_size)?),
        b_empirical: None,
        target_arl: None,
        arl_estimate: None,
    })
}

/// ARL lower bound `(1/2 − α)(m_α/(2α) − 1)` guaranteed by the analytic
/// threshold.
pub fn arl_lower_bound(alpha: f64, max_lookback: u64) -> f64 {
    (0.5 - alpha) * (max_lookback as f64 / (2.0 * alpha) - 1.0)
}

/// The `α` at which [`arl_lower_bound`] equals `target_arl`.
pub fn alpha_for_arl(target_arl: f64, max_lookback: u64) -> Result<f64> {
    let m = max_lookback as f64;
    if target_arl.is_nan() || target_arl <= 0.0 || max_lookback == 0 {
        return Err(Error::param("target ARL and max_lookback must be positive"));
    }
    // 2α² − (1 + m + 2γ)α + m/2 = 0, smaller root
    let s = 1.0 + m + 2.0 * target_arl;
    let alpha = (s - (s * s - 4.0 * m).sqrt()) / 4.0;
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::param(format!(
            "no alpha in (0, 0.5) gives ARL bound {target_arl} with m = {max_lookback}"
        )));
    }
    Ok(alpha)
}

/// Options for [`calibrate_empirical`].
#[derive(Debug, Clone)]
pub struct EmpiricalOptions {
    pub replications: usize,
    /// Defaults to `50·γ`.
    pub horizon: Option<u64>,
    pub seed: u64,
    /// Relative ARL tolerance.
    pub tolerance: f64,
    /// Starting upper bracket; defaults to `ln γ`.
    pub initial_upper: Option<f64>,
}

impl Default for EmpiricalOptions {
    fn default() -> Self {
        Self {
            replications: 500,
            horizon: None,
            seed: 0,
            tolerance: 0.1,
            initial_upper: None,
        }
    }
}

/// Empirical calibration outcome with the null profiles it was computed on.
#[derive(Debug, Clone)]
pub struct EmpiricalCalibration {
    pub threshold: f64,
    pub arl: RunLengthEstimate,
    pub profiles: ProfileSet,
}

/// Finds `b` with `|ARL(b) − γ| ≤ tolerance·γ` by bisection over the record
/// profiles of null paths; the upper bracket is grown (and the paths
/// re-simulated) until it covers `γ`.
pub fn calibrate_empirical(
    config: &DetectorConfig,
    scenario: &ChangeScenario,
    target_arl: f64,
    options: &EmpiricalOptions,
) -> Result<EmpiricalCalibration> {
    let (mut found, profiles) = calibrate_empirical_targets(config, scenario, &[target_arl], options)?;
    let (threshold, arl) = found.pop().expect("one target");
    Ok(EmpiricalCalibration {
        threshold,
        arl,
        profiles,
    })
}

/// Calibrates several ARL targets on one shared set of null paths, simulated
/// far enough for the largest target. Returns `(b, ARL(b))` per target in the
/// given order.
pub fn calibrate_empirical_targets(
    config: &DetectorConfig,
    scenario: &ChangeScenario,
    targets: &[f64],
    options: &EmpiricalOptions,
) -> Result<(Vec<(f64, RunLengthEstimate)>, ProfileSet)> {
    let tol = options.tolerance;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::param("tolerance must lie in (0, 1)"));
    }
    let min_stop = config.min_stop_time() as f64;
    for &g in targets {
        if g.is_nan() || g < 1.0 {
            return Err(Error::param(format!("target ARL must be >= 1; got {g}")));
        }
        if min_stop > g * (1.0 + tol) {
            return Err(Error::BracketFailure(format!(
                "target ARL {g} is below the minimum stopping time {min_stop}"
            )));
        }
    }
    let top = targets
        .iter()
        .copied()
        .fold(f64::NAN, f64::max);
    if top.is_nan() {
        return Err(Error::param("no ARL targets given"));
    }
    let horizon = options
        .horizon
        .unwrap_or_else(|| (50.0 * top).ceil() as u64)
        .max(1);
    let null = scenario.with_change_point(ChangePoint::Never);

    let mut upper = options.initial_upper.unwrap_or_else(|| top.ln().max(0.5));
    let mut profiles;
    let mut expansions = 0;
    loop {
        profiles = simulate_profiles(config, &null, options.replications, horizon, upper, options.seed)?;
        let at_upper = profiles.estimate(upper);
        if at_upper.mean >= top * (1.0 - tol) {
            break;
        }
        if at_upper.censored_fraction >= 1.0 || expansions >= 60 {
            return Err(Error::BracketFailure(format!(
                "ARL {:.1} at b = {upper:.3} stays below target {top}",
                at_upper.mean
            )));
        }
        // extrapolate log ARL linearly from the last unit of b
        let below = profiles.estimate(upper - 1.0).mean.max(min_stop);
        let slope = (at_upper.mean.ln() - below.ln()).max(0.25);
        let step = ((top.ln() - at_upper.mean.ln()) / slope).clamp(0.25, 4.0);
        upper += step + 0.1;
        expansions += 1;
    }
    let found = targets
        .iter()
        .map(|&g| bisect_threshold(&profiles, g, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok((found, profiles))
}

fn bisect_threshold(profiles: &ProfileSet, target: f64, tol: f64) -> Result<(f64, RunLengthEstimate)> {
    let within = |arl: f64| (arl - target).abs() <= tol * target;
    let mut lo = profiles.floor_threshold();
    let mut hi = profiles.max_threshold();
    let lo_arl = profiles.estimate(lo);
    if within(lo_arl.mean) {
        return Ok((lo, lo_arl));
    }
    if lo_arl.mean > target {
        return Err(Error::BracketFailure(format!(
            "minimum achievable ARL {:.2} exceeds target {target}",
            lo_arl.mean
        )));
    }
    let hi_arl = profiles.estimate(hi);
    if hi_arl.mean < target * (1.0 - tol) {
        return Err(Error::BracketFailure(format!(
            "ARL {:.1} at b = {hi:.3} stays below target {target}",
            hi_arl.mean
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let est = profiles.estimate(mid);
        if within(est.mean) {
            return Ok((mid, est));
        }
        if est.mean < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let hi_est = profiles.estimate(hi);
    if within(hi_est.mean) {
        return Ok((hi, hi_est));
    }
    // the statistic takes discrete values, so ARL(b) is a step function
    let lo_est = profiles.estimate(lo);
    Err(Error::BracketFailure(format!(
        "ARL jumps from {:.1} to {:.1} at b = {hi:.6}, across target {target} ± {:.0}%",
        lo_est.mean,
        hi_est.mean,
        100.0 * tol
    )))
}

/// Empirical check of the window false-alarm bound.
#[derive(Debug, Clone, PartialEq)]
pub struct FalseAlarmCheck {
    pub empirical: f64,
    pub std_error: f64,
    pub bound: f64,
    pub replications: usize,
    pub pass: bool,
    /// The bound exceeds 1 and says nothing.
    pub vacuous: bool,
}

/// Estimates `P_∞(τ ≤ T < τ + m_α)` for the GLR rule at `window.threshold`
/// and compares it with `2·m_α·e^{−b}·C(N,n)`. Passes when the estimate is at
/// most the bound plus three binomial standard errors.
pub fn verify_false_alarm_bound(
    window: &GlrWindowConfig,
    candidates: &CandidateSet,
    scenario: &ChangeScenario,
    tau: u64,
    replications: usize,
    seed: u64,
) -> Result<FalseAlarmCheck> {
    if tau == 0 || replications == 0 {
        return Err(Error::param("tau and replications must be >= 1"));
    }
    let null = scenario.with_change_point(ChangePoint::Never);
    let b = window.threshold;
    let m = window.max_lookback;
    let last = tau + m - 1;
    let config = DetectorConfig::Glr {
        window: window.clone(),
        candidates: candidates.clone(),
    };
    let hits: usize = (0..replications as u64)
        .into_par_iter()
        .map_init(
            || config.build(&null).expect("valid detector"),
            |det, r| -> Result<usize> {
                det.reset();
                let mut sampler = ScenarioSampler::new(&null, RandomSource::for_replication(seed, r));
                let mut g = GraphSnapshot::empty(null.num_nodes());
                for t in 1..=last {
                    sampler.fill_next(&mut g);
                    if det.observe_above(&g, b)?.is_some() {
                        return Ok((t >= tau) as usize);
                    }
                }
                Ok(0)
            },
        )
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let r = replications as f64;
    let empirical = hits as f64 / r;
    let bound = (std::f64::consts::LN_2 + (m as f64).ln() - b
        + ln_binomial(null.num_nodes(), null.community_size()))
    .exp();
    let p_for_se = bound.clamp(0.0, 1.0).max(empirical);
    let std_error = (p_for_se * (1.0 - p_for_se) / r).sqrt();
    Ok(FalseAlarmCheck {
        empirical,
        std_error,
        bound,
        replications,
        pass: empirical <= bound + 3.0 * std_error,
        vacuous: bound > 1.0,
    })
}

/// One `(b, ARL, EDD)` point of a tradeoff curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub detector: String,
    pub threshold: f64,
    pub arl: RunLengthEstimate,
    pub edd: RunLengthEstimate,
}

/// Replication and horizon settings for [`tradeoff_curve`].
#[derive(Debug, Clone, Copy)]
pub struct CurveOptions {
    pub replications_arl: usize,
    pub replications_edd: usize,
    pub horizon_arl: u64,
    pub horizon_edd: u64,
    pub seed: u64,
}

/// ARL and EDD at every threshold in `grid` for each detector. Paths are
/// shared across thresholds; points are ordered by threshold.
pub fn tradeoff_curve(
    configs: &[DetectorConfig],
    scenario: &ChangeScenario,
    grid: &[f64],
    options: &CurveOptions,
) -> Result<Vec<TradeoffPoint>> {
    if grid.is_empty() {
        return Err(Error::param("threshold grid is empty"));
    }
    if grid.iter().any(|b| !b.is_finite()) {
        return Err(Error::param("thresholds must be finite"));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let top = *sorted.last().expect("nonempty");
    let null = scenario.with_change_point(ChangePoint::Never);
    let post = scenario.with_change_point(ChangePoint::At(1));
    let mut out = Vec::new();
    for config in configs {
        let arl = simulate_profiles(config, &null, options.replications_arl, options.horizon_arl, top, options.seed)?;
        let edd = simulate_profiles(config, &post, options.replications_edd, options.horizon_edd, top, options.seed)?;
        for &b in &sorted {
            out.push(TradeoffPoint {
                detector: config.label(),
                threshold: b,
                arl: arl.estimate(b),
                edd: edd.estimate(b),
            });
        }
    }
    Ok(out)
}

/// Header of the tradeoff CSV.
pub const TRADEOFF_HEADER: &str = "detector,b,arl,arl_se,edd,edd_se,reps_arl,reps_edd,censored_frac";

/// Formats `x` with six significant digits in the style of C's `%g`.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_tradeoff_csv<W: Write>(out: &mut W, points: &[TradeoffPoint]) -> Result<()> {
    writeln!(out, "{TRADEOFF_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            p.detector,
            fmt_sig6(p.threshold),
            fmt_sig6(p.arl.mean),
            fmt_sig6(p.arl.std_error),
            fmt_sig6(p.edd.mean),
            fmt_sig6(p.edd.std_error),
            p.arl.replications,
            p.edd.replications,
            fmt_sig6(p.arl.censored_fraction),
        )?;
    }
    Ok(())
}

/// Least-squares slope of `y` on `x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Convenience: the known-`p1` GLR config used in the experiments.
pub fn glr_config(
    min_lookback: u64,
    max_lookback: u64,
    scan_mode: ScanMode,
    candidates: CandidateSet,
) -> Result<DetectorConfig> {
    Ok(DetectorConfig::Glr {
        window: GlrWindowConfig::new(min_lookback, max_lookback, 0.0, scan_mode, P1Mode::Known)?,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(18.859_193_706), "18.8592");
        assert_eq!(fmt_sig6(0.5), "0.5");
        assert_eq!(fmt_sig6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_sig6(0.000_012_345_67), "1.23457e-05");
        assert_eq!(fmt_sig6(100.0), "100");
        assert_eq!(fmt_sig6(-2.5), "-2.5");
        assert_eq!(fmt_sig6(0.0), "0");
    }

    #[test]
    fn analytic_threshold_examples() {
        let b = analytic_threshold(0.01, 50, 20, 5).unwrap();
        assert!((b - 18.859_193_706_106_73).abs() < 1e-9);
        let b2 = analytic_threshold(0.02, 50, 20, 5).unwrap();
        assert!((b - b2 - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(analytic_threshold(0.0, 50, 20, 5).is_err());
        assert!(analytic_threshold(1.0, 50, 20, 5).is_err());
        let r = calibrate_analytic(0.05, 20, 10, 3).unwrap();
        assert!((r.b_analytic.unwrap() - 96_000f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn alpha_inverts_arl_bound() {
        let a = alpha_for_arl(2000.0, 40).unwrap();
        assert!((arl_lower_bound(a, 40) - 2000.0).abs() < 1e-6);
    }

    #[test]
    fn profile_stopping_times() {
        let p = RunProfile {
            records: vec![(1, -3.0), (4, 0.5), (9, 2.0)],
            end: 9,
        };
        assert_eq!(p.stopping_time(-5.0), (1, false));
        assert_eq!(p.stopping_time(0.0), (4, false));
        assert_eq!(p.stopping_time(0.5), (9, false));
        assert_eq!(p.stopping_time(2.0), (9, true));
    }

    #[test]
    fn slope_of_line() {
        assert!((fitted_slope(&[1.0, 2.0, 3.0], &[2.0, 4.5, 7.0]) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn estimate_standard_error() {
        let e = RunLengthEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0], 1);
        assert_eq!(e.mean, 2.5);
        assert!((e.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
        assert!(e.is_lower_bound());
    }
}
