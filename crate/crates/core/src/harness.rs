//! Experiment configuration, execution and report files.
//!
//! A config is a TOML document with the sections `domain`, `scenario`
//! (with `[[scenario.segments]]`), `[[learners]]`, `evaluation`, `output` and an
//! optional `sweep` grid. Every default that gets filled in is listed in the
//! manifest under `defaults_applied`.
//!
//! ```toml
//! [domain]
//! kind = "ball"
//! dimension = 2
//! radius = 1.0
//!
//! [scenario]
//! seed = 7
//!
//! [[scenario.segments]]
//! length = 64
//! family = "linear"
//! scale = 1.0
//!
//! [[learners]]
//! kind = "uma"
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainKind, Vector};
use crate::error::{Error, Result};
use crate::evaluation::{
    baseline_ogd, evaluate_intervals, IntervalRecord, RegretEvaluator, RegretReport, StepRule, WEAKLY_ADAPTIVE_MAX_T,
};
use crate::meta::{Learner, Mode, RoundRecord};
use crate::scenario::{generate_scenario, FamilySpec, Scenario, ScenarioSpec, SegmentSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Exit status for an error: configuration problems (including a loss whose
/// gradient exceeds the declared bound) map to 2, everything else to 3.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::GradientBound { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Uma,
    Pae,
    /// Projected OGD with step `D / (G sqrt(t))`.
    Ogd,
    /// Projected OGD with step `1 / (lambda t)`.
    OgdStrong,
}

impl LearnerKind {
    pub fn label(&self) -> &'static str {
        match self {
            LearnerKind::Uma => "uma",
            LearnerKind::Pae => "pae",
            LearnerKind::Ogd => "ogd",
            LearnerKind::OgdStrong => "ogd_strong",
        }
    }

    pub fn mode(&self) -> Option<Mode> {
        match self {
            LearnerKind::Uma => Some(Mode::Uma),
            LearnerKind::Pae => Some(Mode::Pae),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    #[serde(flatten)]
    pub kind: DomainKind,
    pub gradient_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub segments: Vec<SegmentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub name: String,
    pub kind: LearnerKind,
    pub lambda: Option<f64>,
    pub audit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    /// Per-round comparator tolerance.
    pub tol: f64,
    /// Window lengths for the strongly adaptive regret.
    pub taus: Vec<usize>,
    /// Random intervals checked on top of every covering interval.
    pub random_intervals: usize,
    pub interval_seed: u64,
    pub weakly_adaptive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_scale: Option<Vec<f64>>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub domain: DomainConfig,
    pub scenario: ScenarioConfig,
    pub learners: Vec<LearnerConfig>,
    pub evaluation: EvaluationConfig,
    pub output: OutputConfig,
    pub sweep: Option<SweepGrid>,
    /// Keys that were absent and received a default.
    pub defaults_applied: Vec<String>,
    /// Values replaced on the command line or by a sweep cell.
    pub overrides: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: RawDomain,
    scenario: RawScenario,
    learners: Vec<RawLearner>,
    evaluation: Option<RawEvaluation>,
    output: Option<RawOutput>,
    sweep: Option<SweepGrid>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawDomain {
    Ball { dimension: Option<usize>, radius: f64, center: Option<Vec<f64>>, gradient_bound: Option<f64> },
    Box { lower: Vec<f64>, upper: Vec<f64>, gradient_bound: Option<f64> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    seed: u64,
    segments: Vec<RawSegment>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    length: usize,
    family: String,
    scale: Option<f64>,
    lambda: Option<f64>,
    spread: Option<f64>,
    feature_scale: Option<f64>,
    noise: Option<f64>,
}

impl RawSegment {
    fn resolve(self, i: usize) -> Result<SegmentSpec> {
        let need = |key: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::Config(format!("scenario.segments[{i}]: missing field `{key}` for family `{}`", self.family)))
        };
        let allowed: &[&str] = match self.family.as_str() {
            "linear" => &["scale"],
            "quadratic" => &["lambda", "spread"],
            "squared_error" => &["feature_scale", "noise"],
            other => {
                return Err(Error::Config(format!(
                    "scenario.segments[{i}]: unknown family `{other}`, expected one of `linear`, `quadratic`, `squared_error`"
                )))
            }
        };
        let present = [
            ("scale", self.scale),
            ("lambda", self.lambda),
            ("spread", self.spread),
            ("feature_scale", self.feature_scale),
            ("noise", self.noise),
        ];
        if let Some((key, _)) = present.iter().find(|(k, v)| v.is_some() && !allowed.contains(k)) {
            return Err(Error::Config(format!(
                "scenario.segments[{i}]: `{key}` does not apply to family `{}`",
                self.family
            )));
        }
        let family = match self.family.as_str() {
            "linear" => FamilySpec::Linear { scale: need("scale", self.scale)? },
            "quadratic" => FamilySpec::Quadratic { lambda: need("lambda", self.lambda)?, spread: need("spread", self.spread)? },
            _ => FamilySpec::SquaredError {
                feature_scale: need("feature_scale", self.feature_scale)?,
                noise: need("noise", self.noise)?,
            },
        };
        Ok(SegmentSpec { length: self.length, family })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLearner {
    name: Option<String>,
    kind: LearnerKind,
    lambda: Option<f64>,
    audit: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvaluation {
    tol: Option<f64>,
    taus: Option<Vec<usize>>,
    random_intervals: Option<usize>,
    interval_seed: Option<u64>,
    weakly_adaptive: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

const DEFAULT_TOL: f64 = 1e-8;
const DEFAULT_RANDOM_INTERVALS: usize = 50;

/// 1-based line of the first line containing `needle`, for diagnostics after parsing.
fn line_of(src: &str, needle: &str) -> Option<usize> {
    src.lines().position(|l| l.contains(needle)).map(|i| i + 1)
}

fn config_err(src: &str, needle: &str, msg: String) -> Error {
    match line_of(src, needle) {
        Some(line) => Error::Config(format!("line {line}: {msg}")),
        None => Error::Config(msg),
    }
}

/// Parses and resolves a TOML config. Errors carry the offending line and key.
pub fn parse_config(src: &str) -> Result<Config> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    let mut defaults = Vec::new();
    let segments = raw
        .scenario
        .segments
        .into_iter()
        .enumerate()
        .map(|(i, seg)| seg.resolve(i))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::Config(msg) => config_err(src, "[[scenario.segments]]", msg),
            other => other,
        })?;
    let scenario = ScenarioConfig { seed: raw.scenario.seed, segments };

    let domain = match raw.domain {
        RawDomain::Ball { dimension, radius, center, gradient_bound } => {
            let center = match (center, dimension) {
                (Some(c), Some(d)) if c.len() != d => {
                    return Err(config_err(
                        src,
                        "center",
                        format!("domain.center has {} entries but domain.dimension = {d}", c.len()),
                    ))
                }
                (Some(c), _) => c,
                (None, Some(d)) => {
                    defaults.push("domain.center".to_string());
                    vec![0.0; d]
                }
                (None, None) => {
                    return Err(config_err(src, "[domain]", "missing field `dimension` (or `center`) in `domain`".into()))
                }
            };
            DomainConfig { kind: DomainKind::L2Ball { center, radius }, gradient_bound }
        }
        RawDomain::Box { lower, upper, gradient_bound } => {
            DomainConfig { kind: DomainKind::Box { lower, upper }, gradient_bound }
        }
    };
    if raw.learners.is_empty() {
        return Err(Error::Config("at least one [[learners]] entry is required".into()));
    }
    let mut learners = Vec::with_capacity(raw.learners.len());
    let mut names = BTreeSet::new();
    for (i, l) in raw.learners.into_iter().enumerate() {
        let name = match l.name {
            Some(n) => n,
            None => {
                defaults.push(format!("learners[{i}].name"));
                l.kind.label().to_string()
            }
        };
        if !names.insert(name.clone()) {
            return Err(config_err(src, &name, format!("duplicate learner name `{name}`; set distinct `name` keys")));
        }
        match (l.kind, l.lambda) {
            (LearnerKind::OgdStrong, None) => {
                return Err(config_err(src, "ogd_strong", format!("learners[{i}]: missing field `lambda` for kind `ogd_strong`")))
            }
            (LearnerKind::OgdStrong, Some(lam)) if !(lam > 0.0) => {
                return Err(config_err(src, "lambda", format!("learners[{i}]: `lambda` must be positive, got {lam}")))
            }
            (LearnerKind::OgdStrong, _) => {}
            (kind, Some(_)) => {
                return Err(config_err(src, "lambda", format!("learners[{i}]: `lambda` only applies to kind `ogd_strong`, not `{}`", kind.label())))
            }
            _ => {}
        }
        let audit = l.audit.unwrap_or_else(|| {
            defaults.push(format!("learners[{i}].audit"));
            false
        });
        learners.push(LearnerConfig { name, kind: l.kind, lambda: l.lambda, audit });
    }

    let ev = raw.evaluation.unwrap_or(RawEvaluation {
        tol: None,
        taus: None,
        random_intervals: None,
        interval_seed: None,
        weakly_adaptive: None,
    });
    let mut take = |key: &str, present: bool| {
        if !present {
            defaults.push(format!("evaluation.{key}"));
        }
    };
    take("tol", ev.tol.is_some());
    take("taus", ev.taus.is_some());
    take("random_intervals", ev.random_intervals.is_some());
    take("interval_seed", ev.interval_seed.is_some());
    take("weakly_adaptive", ev.weakly_adaptive.is_some());
    let evaluation = EvaluationConfig {
        tol: ev.tol.unwrap_or(DEFAULT_TOL),
        taus: ev.taus.unwrap_or_default(),
        random_intervals: ev.random_intervals.unwrap_or(DEFAULT_RANDOM_INTERVALS),
        interval_seed: ev.interval_seed.unwrap_or(scenario.seed),
        weakly_adaptive: ev.weakly_adaptive.unwrap_or(false),
    };
    if !(evaluation.tol > 0.0) {
        return Err(config_err(src, "tol", format!("evaluation.tol must be positive, got {}", evaluation.tol)));
    }
    let dir = match raw.output.and_then(|o| o.dir) {
        Some(d) => d,
        None => {
            defaults.push("output.dir".to_string());
            PathBuf::from("out")
        }
    };
    let config = Config {
        domain,
        scenario,
        learners,
        evaluation,
        output: OutputConfig { dir },
        sweep: raw.sweep,
        defaults_applied: defaults,
        overrides: Vec::new(),
    };
    config.validate().map_err(|e| match e {
        Error::Config(msg) => config_err(src, "[[scenario.segments]]", msg),
        other => other,
    })?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<Config> {
    let src = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config(&src).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

impl Config {
    pub fn scenario_spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            seed: self.scenario.seed,
            domain: self.domain.kind.clone(),
            gradient_bound: self.domain.gradient_bound,
            segments: self.scenario.segments.clone(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.scenario.segments.iter().map(|s| s.length).sum()
    }

    /// Checks that need the whole config: window lengths and the weak-regret horizon.
    pub fn validate(&self) -> Result<()> {
        let t = self.horizon();
        if self.scenario.segments.is_empty() {
            return Err(Error::Config("scenario needs at least one [[scenario.segments]] entry".into()));
        }
        if let Some(&tau) = self.evaluation.taus.iter().find(|&&tau| tau == 0 || tau > t) {
            return Err(Error::Config(format!("evaluation.taus contains {tau}, outside [1, T = {t}]")));
        }
        if self.evaluation.weakly_adaptive && t > WEAKLY_ADAPTIVE_MAX_T {
            return Err(Error::Config(format!(
                "evaluation.weakly_adaptive needs T <= {WEAKLY_ADAPTIVE_MAX_T}, got T = {t}"
            )));
        }
        Ok(())
    }

    /// Replaces the scenario seed (and the interval seed when that was defaulted).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scenario.seed = seed;
        if self.defaults_applied.iter().any(|k| k == "evaluation.interval_seed") {
            self.evaluation.interval_seed = seed;
        }
        self.overrides.push(format!("scenario.seed = {seed}"));
        self
    }

    pub fn with_output_dir(mut self, dir: &Path) -> Self {
        self.output.dir = dir.to_path_buf();
        self.overrides.push(format!("output.dir = {}", dir.display()));
        self
    }

    /// Rescales segment lengths to total `horizon`; the last segment absorbs rounding.
    fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        let t = self.horizon();
        let n = self.scenario.segments.len();
        let mut used = 0;
        for (i, seg) in self.scenario.segments.iter_mut().enumerate() {
            seg.length = if i + 1 == n {
                horizon.checked_sub(used).unwrap_or(0)
            } else {
                ((seg.length as f64) * horizon as f64 / t as f64).round() as usize
            };
            used += seg.length;
            if seg.length == 0 {
                return Err(Error::Config(format!("sweep horizon {horizon} leaves segment {i} empty")));
            }
        }
        self.overrides.push(format!("horizon = {horizon}"));
        Ok(self)
    }

    fn with_lambda(mut self, lambda: f64) -> Self {
        for seg in &mut self.scenario.segments {
            if let FamilySpec::Quadratic { lambda: l, .. } = &mut seg.family {
                *l = lambda;
            }
        }
        for l in &mut self.learners {
            if l.kind == LearnerKind::OgdStrong {
                l.lambda = Some(lambda);
            }
        }
        self.overrides.push(format!("lambda = {lambda}"));
        self
    }

    fn with_feature_scale(mut self, scale: f64) -> Self {
        for seg in &mut self.scenario.segments {
            if let FamilySpec::SquaredError { feature_scale, .. } = &mut seg.family {
                *feature_scale = scale;
            }
        }
        self.overrides.push(format!("feature_scale = {scale}"));
        self
    }

    fn with_tau(mut self, tau: usize) -> Self {
        self.evaluation.taus = vec![tau];
        self.overrides.push(format!("tau = {tau}"));
        self
    }

    /// One config per grid cell, in row-major order over seed, horizon, tau, lambda, feature_scale.
    pub fn sweep_cells(&self) -> Result<Vec<Config>> {
        let grid = self.sweep.clone().unwrap_or_default();
        let mut cells = vec![Config { sweep: None, ..self.clone() }];
        if let Some(seeds) = &grid.seed {
            cells = cells.into_iter().flat_map(|c| seeds.iter().map(move |&s| c.clone().with_seed(s))).collect();
        }
        if let Some(hs) = &grid.horizon {
            cells = cells
                .into_iter()
                .flat_map(|c| hs.iter().map(move |&h| c.clone().with_horizon(h)))
                .collect::<Result<_>>()?;
        }
        if let Some(taus) = &grid.tau {
            cells = cells.into_iter().flat_map(|c| taus.iter().map(move |&t| c.clone().with_tau(t))).collect();
        }
        if let Some(ls) = &grid.lambda {
            cells = cells.into_iter().flat_map(|c| ls.iter().map(move |&l| c.clone().with_lambda(l))).collect();
        }
        if let Some(fs) = &grid.feature_scale {
            cells = cells.into_iter().flat_map(|c| fs.iter().map(move |&f| c.clone().with_feature_scale(f))).collect();
        }
        for c in &cells {
            c.validate()?;
        }
        Ok(cells)
    }
}

/// One row of `summary.csv` / `sweep.csv`: one learner, one window length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub learner: String,
    pub kind: String,
    pub seed: u64,
    pub horizon: usize,
    pub tau: Option<usize>,
    pub sa_regret: Option<f64>,
    pub static_regret: f64,
    pub wa_regret: Option<f64>,
    pub intervals_checked: usize,
    pub violations: usize,
    pub max_bound_ratio: Option<f64>,
    pub lambda: Option<f64>,
    pub feature_scale: Option<f64>,
    pub alpha: Option<f64>,
    pub diameter: f64,
    pub gradient_bound: f64,
}

const SUMMARY_HEADER: [&str; 16] = [
    "learner",
    "kind",
    "seed",
    "horizon",
    "tau",
    "sa_regret",
    "static_regret",
    "wa_regret",
    "intervals_checked",
    "violations",
    "max_bound_ratio",
    "lambda",
    "feature_scale",
    "alpha",
    "diameter",
    "gradient_bound",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SummaryRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.learner.clone(),
            self.kind.clone(),
            self.seed.to_string(),
            self.horizon.to_string(),
            opt(self.tau),
            opt(self.sa_regret),
            self.static_regret.to_string(),
            opt(self.wa_regret),
            self.intervals_checked.to_string(),
            self.violations.to_string(),
            opt(self.max_bound_ratio),
            opt(self.lambda),
            opt(self.feature_scale),
            opt(self.alpha),
            self.diameter.to_string(),
            self.gradient_bound.to_string(),
        ]
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.fields()).map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .map_err(|e| Error::ContractViolation(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Per-round trajectory CSV: `round, w0..w{d-1}, loss, n_active_ons, n_active_aogd, potential`.
/// Floats use the shortest representation that reads back to the same value.
pub fn trajectory_csv(records: &[RoundRecord], dimension: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["round".to_string()];
    header.extend((0..dimension).map(|i| format!("w{i}")));
    header.extend(["loss", "n_active_ons", "n_active_aogd", "potential"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![r.round.to_string()];
        row.extend(r.decision.iter().map(|x| x.to_string()));
        row.push(r.loss.to_string());
        row.push(r.n_active_ons.to_string());
        row.push(r.n_active_aogd.to_string());
        row.push(opt(r.potential));
        w.write_record(&row).map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .map_err(|e| Error::ContractViolation(e.to_string()))
}

/// Reads a trajectory CSV back; gradients are recomputed from the scenario losses.
pub fn read_trajectory(text: &str, scenario: &Scenario) -> Result<Vec<RoundRecord>> {
    let d = scenario.domain.dimension();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() != d + 5 {
        return Err(Error::Config(format!(
            "trajectory has {} columns, expected {} for dimension {d}",
            header.len(),
            d + 5
        )));
    }
    let bad = |row: usize, what: &str| Error::Config(format!("trajectory row {row}: cannot parse {what}"));
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let round: usize = rec[0].parse().map_err(|_| bad(i + 1, "round"))?;
        if round != i + 1 {
            return Err(Error::Config(format!("trajectory row {} has round {round}", i + 1)));
        }
        let decision = Vector::from_iterator(
            d,
            (0..d).map(|k| rec[1 + k].parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>().map_err(|_| bad(i + 1, "decision"))?,
        );
        let loss: f64 = rec[1 + d].parse().map_err(|_| bad(i + 1, "loss"))?;
        let f = scenario
            .losses
            .get(i)
            .ok_or_else(|| Error::Config(format!("trajectory is longer than the scenario ({} rounds)", scenario.horizon())))?;
        let (value, gradient) = f.eval(&decision)?;
        if (value - loss).abs() > 1e-9 * (1.0 + value.abs()) {
            return Err(Error::Config(format!(
                "trajectory row {round}: stored loss {loss} does not match the scenario loss {value} at the stored decision"
            )));
        }
        out.push(RoundRecord {
            round,
            decision,
            loss,
            gradient,
            n_active_ons: rec[2 + d].parse().map_err(|_| bad(i + 1, "n_active_ons"))?,
            n_active_aogd: rec[3 + d].parse().map_err(|_| bad(i + 1, "n_active_aogd"))?,
            potential: if rec[4 + d].is_empty() { None } else { Some(rec[4 + d].parse().map_err(|_| bad(i + 1, "potential"))?) },
        });
    }
    if out.len() != scenario.horizon() {
        return Err(Error::Config(format!(
            "trajectory has {} rounds but the scenario has {}",
            out.len(),
            scenario.horizon()
        )));
    }
    Ok(out)
}

/// Output of one learner on one scenario.
#[derive(Debug, Clone)]
pub struct LearnerOutcome {
    pub config: LearnerConfig,
    pub trajectory: Vec<RoundRecord>,
    pub report: RegretReport,
    pub static_regret: f64,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub config: Config,
    pub scenario: Scenario,
    pub learners: Vec<LearnerOutcome>,
}

impl CellOutcome {
    pub fn violations(&self) -> usize {
        self.learners.iter().map(|l| l.report.violations().len()).sum()
    }

    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        let single = |vals: Vec<f64>| -> Option<f64> {
            let first = *vals.first()?;
            vals.iter().all(|v| *v == first).then_some(first)
        };
        let lambdas = single(
            self.config
                .scenario
                .segments
                .iter()
                .filter_map(|s| match s.family {
                    FamilySpec::Quadratic { lambda, .. } => Some(lambda),
                    _ => None,
                })
                .collect(),
        );
        let scales = single(
            self.config
                .scenario
                .segments
                .iter()
                .filter_map(|s| match s.family {
                    FamilySpec::SquaredError { feature_scale, .. } => Some(feature_scale),
                    _ => None,
                })
                .collect(),
        );
        let mut rows = Vec::new();
        for l in &self.learners {
            let checked = l.report.records.iter().filter(|r| r.bound.is_some()).count();
            let ratio = l
                .report
                .records
                .iter()
                .filter_map(|r| r.bound.map(|b| r.regret / b))
                .reduce(f64::max);
            let base = SummaryRow {
                learner: l.config.name.clone(),
                kind: l.config.kind.label().to_string(),
                seed: self.config.scenario.seed,
                horizon: self.scenario.horizon(),
                tau: None,
                sa_regret: None,
                static_regret: l.static_regret,
                wa_regret: l.report.weakly_adaptive,
                intervals_checked: checked,
                violations: l.report.violations().len(),
                max_bound_ratio: ratio,
                lambda: lambdas,
                feature_scale: scales,
                alpha: self.scenario.min_alpha(),
                diameter: self.scenario.domain.diameter(),
                gradient_bound: self.scenario.domain.gradient_bound(),
            };
            if l.report.strongly_adaptive.is_empty() {
                rows.push(base);
            } else {
                for &(tau, v) in &l.report.strongly_adaptive {
                    rows.push(SummaryRow { tau: Some(tau), sa_regret: Some(v), ..base.clone() });
                }
            }
        }
        rows
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        for l in &self.learners {
            out.push_str(&format!("== {} ({}) ==\n", l.config.name, l.config.kind.label()));
            out.push_str(&format!("static regret over [1,{}]: {:.6}\n", self.scenario.horizon(), l.static_regret));
            out.push_str(&l.report.summary_text());
        }
        out
    }
}

fn run_learner(scenario: &Scenario, config: &LearnerConfig) -> Result<Vec<RoundRecord>> {
    let domain = &scenario.domain;
    match config.kind {
        LearnerKind::Uma | LearnerKind::Pae => {
            let mode = config.kind.mode().expect("meta learner");
            let mut learner = Learner::new(mode, domain.clone());
            if config.audit {
                learner = learner.with_audit();
            }
            learner.run(&scenario.losses)
        }
        LearnerKind::Ogd => baseline_ogd(&scenario.losses, domain, StepRule::General),
        LearnerKind::OgdStrong => {
            let lambda = config.lambda.ok_or_else(|| Error::Config("ogd_strong needs `lambda`".into()))?;
            baseline_ogd(&scenario.losses, domain, StepRule::StronglyConvex { lambda })
        }
    }
}

/// Measures a stored trajectory against the scenario.
pub fn evaluate_trajectory(
    scenario: &Scenario,
    evaluation: &EvaluationConfig,
    mode: Option<Mode>,
    trajectory: &[RoundRecord],
) -> Result<(RegretReport, f64)> {
    let ev = RegretEvaluator::new(trajectory, &scenario.losses, &scenario.domain, evaluation.tol)?;
    let annotations = scenario.standard_annotations(evaluation.random_intervals, evaluation.interval_seed);
    let records: Vec<IntervalRecord> = evaluate_intervals(&ev, &annotations, mode)?;
    let strongly_adaptive = evaluation
        .taus
        .iter()
        .map(|&tau| ev.strongly_adaptive(tau).map(|r| (tau, r.regret)))
        .collect::<Result<_>>()?;
    let weakly_adaptive = if evaluation.weakly_adaptive { Some(ev.weakly_adaptive()?.regret) } else { None };
    let static_regret = ev.interval(1, scenario.horizon())?.regret;
    Ok((RegretReport { records, strongly_adaptive, weakly_adaptive }, static_regret))
}

/// Generates the scenario and runs and evaluates every learner. No files are touched.
pub fn run_cell(config: &Config) -> Result<CellOutcome> {
    config.validate()?;
    let scenario = generate_scenario(&config.scenario_spec())?;
    let learners = config
        .learners
        .iter()
        .map(|lc| {
            let trajectory = run_learner(&scenario, lc)?;
            let (report, static_regret) = evaluate_trajectory(&scenario, &config.evaluation, lc.kind.mode(), &trajectory)?;
            Ok(LearnerOutcome { config: lc.clone(), trajectory, report, static_regret })
        })
        .collect::<Result<_>>()?;
    Ok(CellOutcome { config: config.clone(), scenario, learners })
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    package: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a Config,
    scenario: Option<ScenarioMeta>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct ScenarioMeta {
    horizon: usize,
    dimension: usize,
    diameter: f64,
    gradient_bound: f64,
    derived_gradient_bound: f64,
    segments: Vec<crate::scenario::SegmentMeta>,
}

impl ScenarioMeta {
    fn of(s: &Scenario) -> Self {
        Self {
            horizon: s.horizon(),
            dimension: s.domain.dimension(),
            diameter: s.domain.diameter(),
            gradient_bound: s.domain.gradient_bound(),
            derived_gradient_bound: s.derived_gradient_bound,
            segments: s.segments.clone(),
        }
    }
}

fn write_manifest(dir: &Path, command: &str, config: &Config, scenario: Option<&Scenario>, outputs: &[String]) -> Result<()> {
    let mut outputs = outputs.to_vec();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        scenario: scenario.map(ScenarioMeta::of),
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::ContractViolation(e.to_string()))?;
    write_atomic(&dir.join("manifest.json"), (text + "\n").as_bytes())
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub cell: CellOutcome,
    pub files: Vec<PathBuf>,
}

/// `run`: one scenario, every configured learner. Writes `trajectory_<name>.csv` and
/// `regret_<name>.csv` per learner, `summary.csv` and `manifest.json` into `config.output.dir`.
pub fn run_experiment(config: &Config) -> Result<RunOutcome> {
    let cell = run_cell(config)?;
    let dir = &config.output.dir;
    let d = cell.scenario.domain.dimension();
    let mut names = Vec::new();
    for l in &cell.learners {
        let traj = format!("trajectory_{}.csv", l.config.name);
        write_atomic(&dir.join(&traj), trajectory_csv(&l.trajectory, d)?.as_bytes())?;
        let regret = format!("regret_{}.csv", l.config.name);
        write_atomic(&dir.join(&regret), l.report.to_csv().as_bytes())?;
        names.push(traj);
        names.push(regret);
    }
    write_atomic(&dir.join("summary.csv"), summary_csv(&cell.summary_rows())?.as_bytes())?;
    names.push("summary.csv".into());
    write_manifest(dir, "run", config, Some(&cell.scenario), &names)?;
    names.push("manifest.json".into());
    Ok(RunOutcome { files: names.iter().map(|n| dir.join(n)).collect(), cell })
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SummaryRow>,
    pub violations: usize,
    pub file: PathBuf,
}

/// `sweep`: every grid cell runs independently (up to `jobs` at once); rows are
/// gathered in cell order into `sweep.csv`, and each cell's rows go to `cells/cell_<k>.csv`.
pub fn sweep(config: &Config, jobs: usize) -> Result<SweepOutcome> {
    let cells = config.sweep_cells()?;
    let dir = config.output.dir.clone();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::ContractViolation(e.to_string()))?;
    let results: Vec<(Vec<SummaryRow>, usize)> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(k, c)| {
                let outcome = run_cell(c)?;
                let rows = outcome.summary_rows();
                write_atomic(&dir.join("cells").join(format!("cell_{k:04}.csv")), summary_csv(&rows)?.as_bytes())?;
                Ok((rows, outcome.violations()))
            })
            .collect::<Result<_>>()
    })?;
    let violations = results.iter().map(|r| r.1).sum();
    let rows: Vec<SummaryRow> = results.into_iter().flat_map(|r| r.0).collect();
    let file = dir.join("sweep.csv");
    write_atomic(&file, summary_csv(&rows)?.as_bytes())?;
    write_manifest(&dir, "sweep", config, None, &["sweep.csv".into(), "cells/".into()])?;
    Ok(SweepOutcome { rows, violations, file })
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    /// `(learner name, report)` for every stored trajectory.
    pub reports: Vec<(String, RegretReport)>,
}

impl VerifyOutcome {
    pub fn violations(&self) -> usize {
        self.reports.iter().map(|(_, r)| r.violations().len()).sum()
    }

    pub fn summary_text(&self) -> String {
        self.reports
            .iter()
            .map(|(name, r)| format!("== {name} ==\n{}", r.summary_text()))
            .collect()
    }
}

/// `verify`: re-checks the bounds on the trajectories stored in `config.output.dir`.
pub fn verify(config: &Config) -> Result<VerifyOutcome> {
    let scenario = generate_scenario(&config.scenario_spec())?;
    let mut reports = Vec::new();
    for lc in &config.learners {
        let path = config.output.dir.join(format!("trajectory_{}.csv", lc.name));
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("cannot read stored trajectory {}: {e}", path.display())))?;
        let trajectory = read_trajectory(&text, &scenario)?;
        let (report, _) = evaluate_trajectory(&scenario, &config.evaluation, lc.kind.mode(), &trajectory)?;
        reports.push((lc.name.clone(), report));
    }
    Ok(VerifyOutcome { reports })
}
