//! The `graph-cpd` command-line front end.
//!
//! Every subcommand reads a flat `key = value` configuration (file plus
//! `--set KEY=VALUE` overrides and a few dedicated flags), validates it into a
//! [`RunConfig`], and writes its output to `--out` or standard output. Output
//! depends only on the configuration, the input files and the seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::detectors::{
    default_max_lookback, localize, Clamp, CusumState, Detector, DetectorKind, GlrDetector, GlrWindowConfig,
    P1Mode, StepReport,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    alpha_for_arl, analytic_threshold, calibrate_empirical, fmt_sig6, tradeoff_curve, write_tradeoff_csv,
    CurveOptions, DetectorConfig, EmpiricalOptions,
};
use crate::graph::{ChangePoint, ChangeScenario, RandomSource, ScenarioSampler};
use crate::likelihood::{change_information, EdgeCountMatrix, LlrWeights};
use crate::scan::{enumerate_candidates, ln_binomial, CandidateSet, ScanMode, DEFAULT_CANDIDATE_CAP};
use crate::snapshot_io::{write_snapshot, SnapshotReader};

#[derive(Debug, Parser)]
#[command(name = "graph-cpd", version, about = "Detect an emerging community in a stream of random graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a simulated snapshot sequence.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a detector over a snapshot sequence and log every step.
    Detect {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        threshold: ThresholdArgs,
        /// Detector: cusum, glr or glr-mle.
        #[arg(long)]
        detector: Option<String>,
        /// Snapshot file; standard input when absent or `-`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Compute a threshold from alpha or a target ARL, as CSV.
    Calibrate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        threshold: ThresholdArgs,
        /// Detector: cusum, glr or glr-mle.
        #[arg(long)]
        detector: Option<String>,
    },
    /// Estimate ARL/EDD over a threshold grid, as CSV.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated detectors, e.g. `cusum,glr`.
        #[arg(long)]
        detectors: Option<String>,
        /// Comma-separated threshold grid.
        #[arg(long)]
        thresholds: Option<String>,
    },
    /// Report the most likely changed subgraph for the window [k, t].
    Localize {
        #[command(flatten)]
        common: CommonArgs,
        /// Snapshot file; standard input when absent or `-`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// First snapshot of the window.
        #[arg(long)]
        k: u64,
        /// Last snapshot of the window.
        #[arg(long)]
        t: u64,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Override a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ThresholdArgs {
    /// Explicit threshold b.
    #[arg(long, conflicts_with_all = ["alpha", "target_arl"], allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    /// False-alarm level for the analytic threshold.
    #[arg(long, conflicts_with = "target_arl")]
    pub alpha: Option<f64>,
    /// Target average run length.
    #[arg(long)]
    pub target_arl: Option<f64>,
}

/// Every key the configuration accepts.
pub const CONFIG_KEYS: &[&str] = &[
    "num_nodes",
    "community_size",
    "p0",
    "p1",
    "change_point",
    "planted",
    "horizon",
    "detector",
    "detectors",
    "min_lookback",
    "max_lookback",
    "threshold",
    "alpha",
    "target_arl",
    "scan_mode",
    "candidate_cap",
    "connected_only",
    "mle_clamp",
    "seed",
    "replications",
    "replications_arl",
    "replications_edd",
    "arl_horizon",
    "edd_horizon",
    "tolerance",
    "thresholds",
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Origin {
    Line(usize),
    Flag(String),
}

impl Origin {
    fn describe(&self) -> String {
        match self {
            Origin::Line(n) => format!("config line {n}"),
            Origin::Flag(f) => format!("flag {f}"),
        }
    }
}

/// Raw key-value pairs with where each came from.
#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, (String, Origin)>,
}

impl ConfigMap {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::parse(line, format!("expected `key = value`, got {content:?}")))?;
            let key = key.trim();
            check_key(key).map_err(|m| Error::parse(line, m))?;
            if map.entries.contains_key(key) {
                return Err(Error::parse(line, format!("duplicate key `{key}`")));
            }
            map.entries
                .insert(key.to_owned(), (value.trim().to_owned(), Origin::Line(line)));
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Sets `key` from a command-line flag, replacing any file value.
    pub fn set_flag(&mut self, key: &str, value: impl Into<String>, flag: &str) -> Result<()> {
        check_key(key).map_err(|m| Error::Config {
            origin: format!("flag {flag}"),
            message: m,
        })?;
        self.entries
            .insert(key.to_owned(), (value.into(), Origin::Flag(flag.to_owned())));
        Ok(())
    }

    pub fn remove(&mut self, key: &str) {
        self.entries.remove(key);
    }

    /// Applies a `KEY=VALUE` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec.split_once('=').ok_or_else(|| Error::Config {
            origin: "flag --set".into(),
            message: format!("expected KEY=VALUE, got {spec:?}"),
        })?;
        let key = key.trim();
        if matches!(key, "threshold" | "alpha" | "target_arl") {
            self.clear_threshold_spec();
        }
        self.set_flag(key, value.trim(), &format!("--set {key}"))
    }

    fn clear_threshold_spec(&mut self) {
        for k in ["threshold", "alpha", "target_arl"] {
            self.remove(k);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn origin(&self, key: &str) -> String {
        self.entries
            .get(key)
            .map_or_else(|| format!("default for `{key}`"), |(_, o)| o.describe())
    }

    fn fail(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            origin: self.origin(key),
            message: message.into(),
        }
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| self.fail(key, format!("`{key}`: cannot parse {v:?}: {e}"))),
        }
    }

    fn optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| self.fail(key, format!("`{key}`: cannot parse {v:?}: {e}"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| self.fail(key, format!("`{key}`: cannot parse {s:?}: {e}")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }
}

fn check_key(key: &str) -> std::result::Result<(), String> {
    if CONFIG_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(format!("unknown key `{key}`"))
    }
}

/// How the detection threshold is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSpec {
    Explicit(f64),
    Alpha(f64),
    TargetArl(f64),
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: ChangeScenario,
    pub horizon: u64,
    pub detector: DetectorKind,
    pub detectors: Vec<DetectorKind>,
    pub min_lookback: u64,
    pub max_lookback: Option<u64>,
    pub threshold: Option<ThresholdSpec>,
    pub scan_mode: ScanMode,
    pub candidate_cap: u64,
    pub connected_only: bool,
    pub clamp: Clamp,
    pub seed: u64,
    pub replications: usize,
    pub replications_arl: usize,
    pub replications_edd: usize,
    pub arl_horizon: Option<u64>,
    pub edd_horizon: u64,
    pub tolerance: f64,
    pub thresholds: Vec<f64>,
}

impl RunConfig {
    /// Validates every field and the constraints between them.
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let num_nodes: usize = map.parsed("num_nodes", 20)?;
        let community_size: usize = map.parsed("community_size", 5)?;
        if num_nodes < 3 {
            return Err(map.fail("num_nodes", "`num_nodes` must be >= 3"));
        }
        if community_size < 2 || community_size >= num_nodes {
            return Err(map.fail(
                "community_size",
                format!("`community_size` must satisfy 2 <= n < num_nodes = {num_nodes}"),
            ));
        }
        let p0: f64 = map.parsed("p0", 0.2)?;
        let p1: f64 = map.parsed("p1", 0.5)?;
        for (key, p) in [("p0", p0), ("p1", p1)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(map.fail(key, format!("`{key}` must lie in (0, 1); got {p}")));
            }
        }
        let change_point: ChangePoint = map.parsed("change_point", ChangePoint::Never)?;
        let planted: Vec<usize> = map
            .list("planted")?
            .unwrap_or_else(|| (0..community_size).collect());
        if planted.len() != community_size {
            return Err(map.fail(
                "planted",
                format!("`planted` lists {} nodes but community_size = {community_size}", planted.len()),
            ));
        }
        let p0e = crate::graph::ErParams::new(p0)?;
        let p1e = crate::graph::ErParams::new(p1)?;
        let blame = if map.get("planted").is_some() { "planted" } else { "p1" };
        let scenario = ChangeScenario::new(num_nodes, planted, p0e, p1e, change_point)
            .map_err(|e| map.fail(blame, e.to_string()))?;

        let horizon: u64 = map.parsed("horizon", 100)?;
        if horizon == 0 {
            return Err(map.fail("horizon", "`horizon` must be >= 1"));
        }
        let detector: DetectorKind = map.parsed("detector", DetectorKind::Glr)?;
        let detectors = map.list("detectors")?.unwrap_or_else(|| vec![detector]);
        if detectors.is_empty() {
            return Err(map.fail("detectors", "`detectors` is empty"));
        }
        let min_lookback: u64 = map.parsed("min_lookback", 1)?;
        if min_lookback == 0 {
            return Err(map.fail("min_lookback", "`min_lookback` must be >= 1"));
        }
        let max_lookback: Option<u64> = map.optional("max_lookback")?;
        if let Some(m) = max_lookback {
            if m <= min_lookback {
                return Err(map.fail(
                    "max_lookback",
                    format!("`max_lookback` ({m}) must exceed min_lookback ({min_lookback})"),
                ));
            }
        }

        let given: Vec<&str> = ["threshold", "alpha", "target_arl"]
            .into_iter()
            .filter(|k| map.get(k).is_some())
            .collect();
        if given.len() > 1 {
            return Err(map.fail(
                given[1],
                format!("give only one of threshold, alpha, target_arl (found {})", given.join(", ")),
            ));
        }
        let threshold = match given.first().copied() {
            None => None,
            Some("threshold") => {
                let b: f64 = map.parsed("threshold", 0.0)?;
                if !b.is_finite() {
                    return Err(map.fail("threshold", "`threshold` must be finite"));
                }
                Some(ThresholdSpec::Explicit(b))
            }
            Some("alpha") => {
                let a: f64 = map.parsed("alpha", 0.0)?;
                if !(a > 0.0 && a < 1.0) {
                    return Err(map.fail("alpha", format!("`alpha` must lie in (0, 1); got {a}")));
                }
                Some(ThresholdSpec::Alpha(a))
            }
            Some(_) => {
                let g: f64 = map.parsed("target_arl", 0.0)?;
                if !(g >= 1.0 && g.is_finite()) {
                    return Err(map.fail("target_arl", format!("`target_arl` must be >= 1; got {g}")));
                }
                Some(ThresholdSpec::TargetArl(g))
            }
        };

        let scan_mode: ScanMode = map.parsed("scan_mode", ScanMode::Exhaustive)?;
        let candidate_cap: u64 = map.parsed("candidate_cap", DEFAULT_CANDIDATE_CAP)?;
        let connected_only: bool = map.parsed("connected_only", false)?;
        let clamp = match map.get("mle_clamp") {
            None | Some("half") => Clamp::HalfCount,
            Some(v) => {
                let eps: f64 = v
                    .parse()
                    .map_err(|_| map.fail("mle_clamp", format!("`mle_clamp` must be `half` or a number; got {v:?}")))?;
                if !(eps > 0.0 && eps < 0.5) {
                    return Err(map.fail("mle_clamp", "`mle_clamp` must lie in (0, 0.5)"));
                }
                Clamp::Fixed(eps)
            }
        };
        let seed: u64 = map.parsed("seed", 0)?;
        let replications: usize = map.parsed("replications", 500)?;
        let replications_arl: usize = map.parsed("replications_arl", replications)?;
        let replications_edd: usize = map.parsed("replications_edd", replications)?;
        for (key, r) in [
            ("replications", replications),
            ("replications_arl", replications_arl),
            ("replications_edd", replications_edd),
        ] {
            if r == 0 {
                return Err(map.fail(key, format!("`{key}` must be >= 1")));
            }
        }
        let arl_horizon: Option<u64> = map.optional("arl_horizon")?;
        let edd_horizon: u64 = map.parsed("edd_horizon", 10_000)?;
        if arl_horizon == Some(0) || edd_horizon == 0 {
            let key = if edd_horizon == 0 { "edd_horizon" } else { "arl_horizon" };
            return Err(map.fail(key, format!("`{key}` must be >= 1")));
        }
        let tolerance: f64 = map.parsed("tolerance", 0.1)?;
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(map.fail("tolerance", "`tolerance` must lie in (0, 1)"));
        }
        let thresholds: Vec<f64> = map.list("thresholds")?.unwrap_or_default();
        if thresholds.iter().any(|b| !b.is_finite()) {
            return Err(map.fail("thresholds", "`thresholds` must be finite"));
        }
        Ok(Self {
            scenario,
            horizon,
            detector,
            detectors,
            min_lookback,
            max_lookback,
            threshold,
            scan_mode,
            candidate_cap,
            connected_only,
            clamp,
            seed,
            replications,
            replications_arl,
            replications_edd,
            arl_horizon,
            edd_horizon,
            tolerance,
            thresholds,
        })
    }

    fn information(&self) -> Result<f64> {
        let s = &self.scenario;
        change_information(s.community_size(), s.p0(), s.p1())
    }

    fn ln_candidates(&self) -> f64 {
        ln_binomial(self.scenario.num_nodes(), self.scenario.community_size())
    }

    /// `max_lookback` if configured, else the window rule applied to `b`.
    pub fn window_for(&self, b: f64) -> Result<u64> {
        match self.max_lookback {
            Some(m) => Ok(m),
            None => Ok(default_max_lookback(b, self.information()?, self.min_lookback)),
        }
    }

    /// Threshold and window for a single run.
    pub fn resolve_threshold(&self, kind: DetectorKind) -> Result<(f64, u64)> {
        let spec = self.threshold.ok_or_else(|| Error::Config {
            origin: "configuration".into(),
            message: "one of threshold, alpha or target_arl is required".into(),
        })?;
        let (n, size) = (self.scenario.num_nodes(), self.scenario.community_size());
        match (spec, kind) {
            (ThresholdSpec::Explicit(b), _) => Ok((b, self.window_for(b)?)),
            (ThresholdSpec::Alpha(_), DetectorKind::Cusum) => Err(Error::Config {
                origin: "configuration".into(),
                message: "alpha calibration applies to GLR detectors; give threshold or target_arl".into(),
            }),
            (ThresholdSpec::Alpha(alpha), _) => {
                // b and the window depend on each other; iterate to a fixed point
                let mut m = self.window_for(analytic_threshold(alpha, self.min_lookback + 1, n, size)?)?;
                let mut b = analytic_threshold(alpha, m, n, size)?;
                for _ in 0..50 {
                    let next = self.window_for(b)?;
                    if next == m {
                        break;
                    }
                    m = next;
                    b = analytic_threshold(alpha, m, n, size)?;
                }
                Ok((b, m))
            }
            (ThresholdSpec::TargetArl(g), DetectorKind::Cusum) => Ok((g.ln(), 1)),
            (ThresholdSpec::TargetArl(g), _) => {
                let m = self.window_for(g.ln() + self.ln_candidates())?;
                let alpha = alpha_for_arl(g, m)?;
                Ok((analytic_threshold(alpha, m, n, size)?, m))
            }
        }
    }

    pub fn candidates(&self) -> Result<CandidateSet> {
        let s = &self.scenario;
        Ok(enumerate_candidates(s.num_nodes(), s.community_size(), self.candidate_cap)?
            .with_connected_filter(self.connected_only))
    }

    pub fn window_config(&self, kind: DetectorKind, max_lookback: u64, threshold: f64) -> Result<GlrWindowConfig> {
        let p1_mode = match kind {
            DetectorKind::GlrMle => P1Mode::Mle(self.clamp),
            _ => P1Mode::Known,
        };
        GlrWindowConfig::new(self.min_lookback, max_lookback, threshold, self.scan_mode, p1_mode)
    }

    pub fn detector_config(&self, kind: DetectorKind, max_lookback: u64) -> Result<DetectorConfig> {
        Ok(match kind {
            DetectorKind::Cusum => DetectorConfig::Cusum {
                target: self.scenario.planted_subgraph().to_vec(),
            },
            _ => DetectorConfig::Glr {
                window: self.window_config(kind, max_lookback, 0.0)?,
                candidates: self.candidates()?,
            },
        })
    }

    fn build_detector(&self, kind: DetectorKind, threshold: f64, max_lookback: u64) -> Result<Box<dyn Detector>> {
        let s = &self.scenario;
        Ok(match kind {
            DetectorKind::Cusum => {
                let w = LlrWeights::new(s.p0(), s.p1())?;
                Box::new(CusumState::new(s.num_nodes(), s.planted_subgraph(), w, threshold)?)
            }
            _ => {
                let cfg = self.window_config(kind, max_lookback, threshold)?;
                Box::new(GlrDetector::new(&cfg, &self.candidates()?, s.p0(), Some(s.p1()))?)
            }
        })
    }
}

/// Loads the configuration for a subcommand: file, then `--set` overrides,
/// then dedicated flags.
pub fn load_config(common: &CommonArgs, extra: &[(&str, String, &str)]) -> Result<RunConfig> {
    let mut map = match &common.config {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::default(),
    };
    for spec in &common.set {
        map.apply_override(spec)?;
    }
    if let Some(seed) = common.seed {
        map.set_flag("seed", seed.to_string(), "--seed")?;
    }
    for (key, value, flag) in extra {
        if matches!(*key, "threshold" | "alpha" | "target_arl") {
            map.clear_threshold_spec();
        }
        map.set_flag(key, value.clone(), flag)?;
    }
    RunConfig::from_map(&map)
}

fn threshold_flags(t: &ThresholdArgs) -> Vec<(&'static str, String, &'static str)> {
    let mut out = Vec::new();
    if let Some(b) = t.threshold {
        out.push(("threshold", b.to_string(), "--threshold"));
    }
    if let Some(a) = t.alpha {
        out.push(("alpha", a.to_string(), "--alpha"));
    }
    if let Some(g) = t.target_arl {
        out.push(("target_arl", g.to_string(), "--target-arl"));
    }
    out
}

/// How a command finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Done,
    Alarm,
}

impl Completion {
    pub fn exit_code(self) -> i32 {
        match self {
            Completion::Done => 0,
            Completion::Alarm => 2,
        }
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn open_input(path: &Option<PathBuf>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) if p.as_os_str() != "-" => Box::new(BufReader::new(fs::File::open(p)?)),
        _ => Box::new(BufReader::new(io::stdin().lock())),
    })
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<Completion> {
    match cli.command {
        Command::Simulate { common } => {
            let cfg = load_config(&common, &[])?;
            let mut out = open_output(&common.out)?;
            cmd_simulate(&cfg, &mut out)?;
            out.flush()?;
            Ok(Completion::Done)
        }
        Command::Detect {
            common,
            threshold,
            detector,
            input,
        } => {
            let mut extra = threshold_flags(&threshold);
            if let Some(d) = detector {
                extra.push(("detector", d, "--detector"));
            }
            let cfg = load_config(&common, &extra)?;
            let reader = open_input(&input)?;
            let mut out = open_output(&common.out)?;
            let done = cmd_detect(&cfg, reader, &mut out)?;
            out.flush()?;
            Ok(done)
        }
        Command::Calibrate {
            common,
            threshold,
            detector,
        } => {
            let mut extra = threshold_flags(&threshold);
            if let Some(d) = detector {
                extra.push(("detector", d, "--detector"));
            }
            let cfg = load_config(&common, &extra)?;
            let mut out = open_output(&common.out)?;
            cmd_calibrate(&cfg, &mut out)?;
            out.flush()?;
            Ok(Completion::Done)
        }
        Command::Evaluate {
            common,
            detectors,
            thresholds,
        } => {
            let mut extra = Vec::new();
            if let Some(d) = detectors {
                extra.push(("detectors", d, "--detectors"));
            }
            if let Some(t) = thresholds {
                extra.push(("thresholds", t, "--thresholds"));
            }
            let cfg = load_config(&common, &extra)?;
            let mut out = open_output(&common.out)?;
            cmd_evaluate(&cfg, &mut out)?;
            out.flush()?;
            Ok(Completion::Done)
        }
        Command::Localize { common, input, k, t } => {
            let cfg = load_config(&common, &[])?;
            let reader = open_input(&input)?;
            let mut out = open_output(&common.out)?;
            cmd_localize(&cfg, reader, k, t, &mut out)?;
            out.flush()?;
            Ok(Completion::Done)
        }
    }
}

/// Writes `horizon` snapshots of the configured scenario.
pub fn cmd_simulate<W: Write>(cfg: &RunConfig, out: &mut W) -> Result<()> {
    let mut sampler = ScenarioSampler::new(&cfg.scenario, RandomSource::new(cfg.seed));
    for t in 1..=cfg.horizon {
        let g = sampler.next_snapshot();
        write_snapshot(out, t, &g)?;
    }
    Ok(())
}

fn join_nodes(nodes: &[usize]) -> String {
    nodes.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// One step-log line: `t statistic alarm k_hat v_hat`.
pub fn format_step(report: &StepReport, threshold: f64) -> String {
    match report.statistic {
        None => format!("{} - 0 - -", report.time),
        Some(s) => format!(
            "{} {:.6} {} {} {}",
            report.time,
            s,
            u8::from(s > threshold),
            report.change_point.map_or_else(|| "-".to_owned(), |k| k.to_string()),
            report.subgraph.as_deref().map_or_else(|| "-".to_owned(), join_nodes),
        ),
    }
}

/// Streams snapshots through the configured detector until the first alarm.
pub fn cmd_detect<R: BufRead, W: Write>(cfg: &RunConfig, input: R, out: &mut W) -> Result<Completion> {
    let (b, m) = cfg.resolve_threshold(cfg.detector)?;
    let mut det = cfg.build_detector(cfg.detector, b, m)?;
    let mut reader = SnapshotReader::new(input);
    let mut last = None;
    while let Some((_, g)) = reader.next_snapshot()? {
        if g.num_nodes() != cfg.scenario.num_nodes() {
            return Err(Error::param(format!(
                "stream has {} nodes but num_nodes = {}",
                g.num_nodes(),
                cfg.scenario.num_nodes()
            )));
        }
        let report = det.observe(&g)?;
        writeln!(out, "{}", format_step(&report, b))?;
        if report.exceeds(b) {
            let mut line = format!(
                "# alarm t={} k_hat={} v_hat={} statistic={:.6}",
                report.time,
                report.change_point.unwrap_or(report.time),
                report.subgraph.as_deref().map_or_else(String::new, join_nodes),
                report.statistic.unwrap_or(f64::NAN),
            );
            if let Some(q) = report.p1_hat {
                let _ = write!(line, " p1_hat={q:.6}");
            }
            writeln!(out, "{line}")?;
            return Ok(Completion::Alarm);
        }
        last = Some(report.time);
    }
    let t = last.ok_or(Error::EmptyStream)?;
    writeln!(out, "# no alarm t={t} threshold={b:.6}")?;
    Ok(Completion::Done)
}

/// Header of the calibration CSV.
pub const CALIBRATION_HEADER: &str =
    "detector,alpha,m_alpha,b_analytic,target_arl,b_empirical,arl,arl_se,reps,censored_frac";

/// Analytic and (for a target ARL) empirical thresholds as one CSV row.
pub fn cmd_calibrate<W: Write>(cfg: &RunConfig, out: &mut W) -> Result<()> {
    let kind = cfg.detector;
    let spec = cfg.threshold.ok_or_else(|| Error::Config {
        origin: "configuration".into(),
        message: "calibrate needs alpha or target_arl".into(),
    })?;
    let (b_analytic, m) = match spec {
        ThresholdSpec::Explicit(_) => {
            return Err(Error::Config {
                origin: "configuration".into(),
                message: "calibrate needs alpha or target_arl, not an explicit threshold".into(),
            })
        }
        _ => cfg.resolve_threshold(kind)?,
    };
    let m_col = if kind == DetectorKind::Cusum { String::new() } else { m.to_string() };
    let (alpha, target) = match spec {
        ThresholdSpec::Alpha(a) => (Some(a), None),
        ThresholdSpec::TargetArl(g) if kind != DetectorKind::Cusum => (Some(alpha_for_arl(g, m)?), Some(g)),
        ThresholdSpec::TargetArl(g) => (None, Some(g)),
        ThresholdSpec::Explicit(_) => unreachable!(),
    };
    let opt = |x: Option<f64>| x.map_or_else(String::new, fmt_sig6);
    let row = match target {
        None => format!("{kind},{},{m_col},{},,,,,,", opt(alpha), fmt_sig6(b_analytic)),
        Some(g) => {
            let options = EmpiricalOptions {
                replications: cfg.replications,
                horizon: cfg.arl_horizon,
                seed: cfg.seed,
                tolerance: cfg.tolerance,
                initial_upper: None,
            };
            let det = cfg.detector_config(kind, m)?;
            let found = calibrate_empirical(&det, &cfg.scenario, g, &options)?;
            format!(
                "{kind},{},{m_col},{},{},{},{},{},{},{}",
                opt(alpha),
                fmt_sig6(b_analytic),
                fmt_sig6(g),
                fmt_sig6(found.threshold),
                fmt_sig6(found.arl.mean),
                fmt_sig6(found.arl.std_error),
                found.arl.replications,
                fmt_sig6(found.arl.censored_fraction),
            )
        }
    };
    writeln!(out, "{CALIBRATION_HEADER}")?;
    writeln!(out, "{row}")?;
    Ok(())
}

/// ARL/EDD tradeoff CSV for every configured detector over the grid.
pub fn cmd_evaluate<W: Write>(cfg: &RunConfig, out: &mut W) -> Result<()> {
    if cfg.thresholds.is_empty() {
        return Err(Error::Config {
            origin: "configuration".into(),
            message: "evaluate needs a `thresholds` grid".into(),
        });
    }
    let top = cfg.thresholds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m = cfg.window_for(top)?;
    let configs = cfg
        .detectors
        .iter()
        .map(|&k| cfg.detector_config(k, m))
        .collect::<Result<Vec<_>>>()?;
    let options = CurveOptions {
        replications_arl: cfg.replications_arl,
        replications_edd: cfg.replications_edd,
        horizon_arl: cfg.arl_horizon.unwrap_or(cfg.horizon),
        horizon_edd: cfg.edd_horizon,
        seed: cfg.seed,
    };
    let points = tradeoff_curve(&configs, &cfg.scenario, &cfg.thresholds, &options)?;
    write_tradeoff_csv(out, &points)
}

/// Most likely changed subgraph for the window `[k, t]` of the input stream:
/// writes `k t v_hat statistic`.
pub fn cmd_localize<R: BufRead, W: Write>(cfg: &RunConfig, input: R, k: u64, t: u64, out: &mut W) -> Result<()> {
    if k == 0 || k > t {
        return Err(Error::InvalidWindow { start: k, end: t });
    }
    let mut reader = SnapshotReader::new(input);
    let mut counts = EdgeCountMatrix::new(cfg.scenario.num_nodes());
    while counts.horizon() < t {
        let Some((_, g)) = reader.next_snapshot()? else {
            return Err(Error::WindowOutOfRange {
                start: k,
                end: t,
                first: 1,
                last: counts.horizon(),
            });
        };
        if g.num_nodes() != cfg.scenario.num_nodes() {
            return Err(Error::param(format!(
                "stream has {} nodes but num_nodes = {}",
                g.num_nodes(),
                cfg.scenario.num_nodes()
            )));
        }
        counts.push(&g)?;
    }
    let s = &cfg.scenario;
    let weights = LlrWeights::new(s.p0(), s.p1())?;
    let mut cands = cfg.candidates()?;
    if cfg.scan_mode == ScanMode::Greedy {
        cands = cands.into_greedy();
    }
    match localize(&counts, k, t, &cands, &weights)? {
        Some(r) => writeln!(out, "{k} {t} {} {:.6}", join_nodes(&r.subgraph), r.statistic)?,
        None => writeln!(out, "{k} {t} - -")?,
    }
    Ok(())
}
