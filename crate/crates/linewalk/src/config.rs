//! JSON experiment configuration: schema, validation, canonical hashing.
//!
//! A config names a generator system (a preset or explicit symmetric pairs),
//! picks one experiment, fixes the master seed, and sets the numeric knobs.
//! Parsing fills every default explicitly, so the echoed config is complete:
//! feeding the echo back reproduces the run bit for bit.
//!
//! The content hash covers the run-defining payload only: system, experiment,
//! seed, knobs. The output directory is carried in the echo for provenance
//! but excluded from the hash, since where files land does not change what
//! they contain. Worker-thread count is a command-line run parameter, not
//! config content, for the same reason.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::homeo::{PLHomeo, Rat};
use crate::scenario;
use crate::walkgroup::GeneratorSystem;

/// Environment variable naming the default output root directory.
pub const OUTPUT_DIR_ENV: &str = "LINEWALK_OUT";

/// Fallback output root when neither flag, config, nor env var names one.
pub const DEFAULT_OUTPUT_DIR: &str = "linewalk-out";

/// A config problem, located by a dotted field path.
#[derive(Debug, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Which experiment the run performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Recurrence,
    Oscillation,
    Stationary,
    Uniqueness,
    Contraction,
    Derriennic,
    FullPipeline,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Recurrence => "recurrence",
            Experiment::Oscillation => "oscillation",
            Experiment::Stationary => "stationary",
            Experiment::Uniqueness => "uniqueness",
            Experiment::Contraction => "contraction",
            Experiment::Derriennic => "derriennic",
            Experiment::FullPipeline => "full-pipeline",
        }
    }
}

/// One map in a symmetric generator pair. Rationals are strings like
/// `"1/4"`, `"-3"`, `"131836323/93222358"`; exactness survives the trip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "type",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case",
    deny_unknown_fields
)]
pub enum MapSpec {
    /// x + c
    Translation { c: String },
    /// a x with a > 0
    Scaling { a: String },
    /// a x + b with a > 0
    Affine { a: String, b: String },
    /// Piecewise linear: breakpoints xs (strictly ascending), one slope per
    /// piece from the left tail (len = xs.len() + 1), value at the first
    /// breakpoint.
    Breakpoints {
        xs: Vec<String>,
        slopes: Vec<String>,
        value_at_first: String,
    },
    /// Lift of a circle map: core graph nodes on one period, extended by
    /// commuting with the unit translation.
    UnitLift { nodes: Vec<(String, String)> },
}

/// One symmetric pair: the named map and its inverse, each with `weight`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub name: String,
    pub map: MapSpec,
    pub weight: String,
}

/// Generator system: either a named preset or explicit pairs. Exactly one
/// of the two fields must be present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<PairSpec>>,
}

mod knob_defaults {
    pub fn steps() -> usize {
        10_000
    }
    pub fn trials() -> usize {
        1_000
    }
    pub fn samples() -> usize {
        1_000_000
    }
    pub fn cross_trials() -> usize {
        9
    }
    pub fn kb_iterations() -> usize {
        400
    }
    pub fn kb_batches() -> usize {
        8
    }
    pub fn samples_per_start() -> usize {
        2
    }
    pub fn stop_cap() -> usize {
        100_000_000
    }
    pub fn record_budget() -> usize {
        1 << 17
    }
    pub fn grid_points() -> usize {
        11
    }
    pub fn chart_grid() -> usize {
        512
    }
    pub fn tolerance() -> f64 {
        0.1
    }
    pub fn bootstrap_replicas() -> usize {
        12
    }
    pub fn probe_ramp() -> f64 {
        0.05
    }
    pub fn second_start() -> f64 {
        7.3
    }
    pub fn initial_gap() -> f64 {
        0.5
    }
    pub fn contraction_factor() -> f64 {
        0.5
    }
}

/// Numeric knobs shared by the experiments; every field has an explicit
/// default so a parsed config is always complete.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Knobs {
    /// Walk horizon n.
    #[serde(default = "knob_defaults::steps")]
    pub steps: usize,
    /// Independent trials per ensemble experiment.
    #[serde(default = "knob_defaults::trials")]
    pub trials: usize,
    /// Ratio-ergodic horizon N.
    #[serde(default = "knob_defaults::samples")]
    pub samples: usize,
    /// Replicated ratio-ergodic trials per start in the uniqueness check.
    #[serde(default = "knob_defaults::cross_trials")]
    pub cross_trials: usize,
    /// Stopped excursions in the initial averaging pass.
    #[serde(default = "knob_defaults::kb_iterations")]
    pub kb_iterations: usize,
    /// Independent excursion chains the averaging pass is split into.
    #[serde(default = "knob_defaults::kb_batches")]
    pub kb_batches: usize,
    /// Excursions launched per start atom in the refinement pass.
    #[serde(default = "knob_defaults::samples_per_start")]
    pub samples_per_start: usize,
    /// Hard per-excursion step bound; breaching it is a numeric failure.
    #[serde(default = "knob_defaults::stop_cap")]
    pub stop_cap: usize,
    /// Occupation-record budget per excursion before thinning kicks in.
    #[serde(default = "knob_defaults::record_budget")]
    pub record_budget: usize,
    /// Points of the drift evaluation grid.
    #[serde(default = "knob_defaults::grid_points")]
    pub grid_points: usize,
    /// Points of the coordinate-change fitting grid.
    #[serde(default = "knob_defaults::chart_grid")]
    pub chart_grid: usize,
    /// Slack factor in slope and displacement bounds.
    #[serde(default = "knob_defaults::tolerance")]
    pub tolerance: f64,
    /// Bootstrap replicas for noise floors; 0 skips the bootstrap.
    #[serde(default = "knob_defaults::bootstrap_replicas")]
    pub bootstrap_replicas: usize,
    /// Ramp width of the plateau probe functions.
    #[serde(default = "knob_defaults::probe_ramp")]
    pub probe_ramp: f64,
    /// Second start point of the uniqueness cross-check.
    #[serde(default = "knob_defaults::second_start")]
    pub second_start: f64,
    /// Euclidean gap between the coupled starts when none are given.
    #[serde(default = "knob_defaults::initial_gap")]
    pub initial_gap: f64,
    /// A coupled trial counts as contracted below this final/initial ratio.
    #[serde(default = "knob_defaults::contraction_factor")]
    pub contraction_factor: f64,
    /// Explicit coupled start; null derives it from the recurrence interval.
    #[serde(default)]
    pub start_x: Option<f64>,
    /// Explicit coupled start; null derives it from the recurrence interval.
    #[serde(default)]
    pub start_y: Option<f64>,
}

impl Default for Knobs {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all knob fields have defaults")
    }
}

/// A complete experiment description; the unit the runner consumes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioConfig {
    pub system: SystemSpec,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    /// Output root; absent defers to the command line, the environment
    /// variable, then the built-in default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub knobs: Knobs,
}

impl ScenarioConfig {
    /// Parse and semantically validate a JSON config.
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| ConfigError::new("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Semantic checks beyond the serde schema, each located by field path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match (&self.system.preset, &self.system.pairs) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new(
                    "system",
                    "give either a preset or explicit pairs, not both",
                ))
            }
            (None, None) => {
                return Err(ConfigError::new(
                    "system",
                    "one of `preset` or `pairs` is required",
                ))
            }
            (Some(name), None) => {
                if scenario::preset(name).is_none() {
                    return Err(ConfigError::new(
                        "system.preset",
                        format!(
                            "unknown preset {name:?}; known: {}",
                            scenario::PRESET_NAMES.join(", ")
                        ),
                    ));
                }
            }
            (None, Some(pairs)) => {
                if pairs.is_empty() {
                    return Err(ConfigError::new("system.pairs", "at least one pair"));
                }
            }
        }
        self.build_system()?;

        let k = &self.knobs;
        let positives: [(&str, usize); 9] = [
            ("knobs.steps", k.steps),
            ("knobs.trials", k.trials),
            ("knobs.samples", k.samples),
            ("knobs.cross-trials", k.cross_trials),
            ("knobs.kb-iterations", k.kb_iterations),
            ("knobs.kb-batches", k.kb_batches),
            ("knobs.samples-per-start", k.samples_per_start),
            ("knobs.stop-cap", k.stop_cap),
            ("knobs.record-budget", k.record_budget),
        ];
        for (path, value) in positives {
            if value == 0 {
                return Err(ConfigError::new(path, "must be positive"));
            }
        }
        if k.grid_points < 2 {
            return Err(ConfigError::new("knobs.grid-points", "at least 2"));
        }
        if k.chart_grid < 2 {
            return Err(ConfigError::new("knobs.chart-grid", "at least 2"));
        }
        for (path, value) in [
            ("knobs.tolerance", k.tolerance),
            ("knobs.probe-ramp", k.probe_ramp),
            ("knobs.initial-gap", k.initial_gap),
            ("knobs.contraction-factor", k.contraction_factor),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::new(path, "must be finite and positive"));
            }
        }
        if !k.second_start.is_finite() {
            return Err(ConfigError::new("knobs.second-start", "must be finite"));
        }
        for (path, value) in [("knobs.start-x", k.start_x), ("knobs.start-y", k.start_y)] {
            if value.is_some_and(|v| !v.is_finite()) {
                return Err(ConfigError::new(path, "must be finite"));
            }
        }
        if let (Some(x), Some(y)) = (k.start_x, k.start_y) {
            if x >= y {
                return Err(ConfigError::new(
                    "knobs.start-x",
                    "coupled starts must satisfy start-x < start-y",
                ));
            }
        }
        Ok(())
    }

    /// Construct the generator system the config describes.
    pub fn build_system(&self) -> Result<GeneratorSystem, ConfigError> {
        if let Some(name) = &self.system.preset {
            return scenario::preset(name)
                .map(scenario::Scenario::into_system)
                .ok_or_else(|| ConfigError::new("system.preset", format!("unknown preset {name:?}")));
        }
        let pairs = self
            .system
            .pairs
            .as_ref()
            .ok_or_else(|| ConfigError::new("system", "one of `preset` or `pairs` is required"))?;
        let mut built: Vec<(&str, PLHomeo, Rat)> = Vec::with_capacity(pairs.len());
        for (i, pair) in pairs.iter().enumerate() {
            let base = format!("system.pairs[{i}]");
            if pair.name.is_empty() {
                return Err(ConfigError::new(format!("{base}.name"), "must be nonempty"));
            }
            let map = build_map(&pair.map, &format!("{base}.map"))?;
            let weight = parse_rat(&pair.weight, &format!("{base}.weight"))?;
            if weight <= Rat::zero() {
                return Err(ConfigError::new(
                    format!("{base}.weight"),
                    "must be positive",
                ));
            }
            built.push((pair.name.as_str(), map, weight));
        }
        let system = GeneratorSystem::from_symmetric_pairs(built)
            .map_err(|e| ConfigError::new("system.pairs", e.to_string()))?;
        let report = system.validate();
        if !report.ok() {
            let failures: Vec<String> = report
                .failures()
                .iter()
                .map(|c| format!("{}: {}", c.name, c.detail))
                .collect();
            return Err(ConfigError::new("system.pairs", failures.join("; ")));
        }
        Ok(system)
    }

    /// Compact JSON of the run-defining payload: everything except the
    /// output directory. Equal payloads mean equal runs.
    pub fn canonical_json(&self) -> String {
        let mut hashed = self.clone();
        hashed.output_dir = None;
        serde_json::to_string(&hashed).expect("config serializes")
    }

    /// Pretty JSON of the full config with all defaults filled: the echo.
    pub fn pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical payload, `sha256:` prefixed.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    }

    /// Short system label for directory names: the preset name or `custom`.
    pub fn system_label(&self) -> &str {
        self.system.preset.as_deref().unwrap_or("custom")
    }
}

/// Parse `"n"` or `"n/d"` into an exact rational; `path` locates errors.
pub fn parse_rat(text: &str, path: &str) -> Result<Rat, ConfigError> {
    let trimmed = text.trim();
    let (n, d) = match trimmed.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (trimmed, "1"),
    };
    let numer: BigInt = n
        .parse()
        .map_err(|_| ConfigError::new(path, format!("bad rational {text:?}")))?;
    let denom: BigInt = d
        .parse()
        .map_err(|_| ConfigError::new(path, format!("bad rational {text:?}")))?;
    if denom.is_zero() {
        return Err(ConfigError::new(path, "zero denominator"));
    }
    Ok(Rat::new(numer, denom))
}

fn build_map(spec: &MapSpec, path: &str) -> Result<PLHomeo, ConfigError> {
    let homeo_err = |e: crate::homeo::HomeoError| ConfigError::new(path, e.to_string());
    match spec {
        MapSpec::Translation { c } => {
            Ok(PLHomeo::translation(parse_rat(c, &format!("{path}.c"))?))
        }
        MapSpec::Scaling { a } => {
            PLHomeo::scaling(parse_rat(a, &format!("{path}.a"))?).map_err(homeo_err)
        }
        MapSpec::Affine { a, b } => PLHomeo::affine(
            parse_rat(a, &format!("{path}.a"))?,
            parse_rat(b, &format!("{path}.b"))?,
        )
        .map_err(homeo_err),
        MapSpec::Breakpoints {
            xs,
            slopes,
            value_at_first,
        } => {
            let xs = parse_rat_list(xs, &format!("{path}.xs"))?;
            let slopes = parse_rat_list(slopes, &format!("{path}.slopes"))?;
            let v = parse_rat(value_at_first, &format!("{path}.value-at-first"))?;
            PLHomeo::from_breakpoints(xs, slopes, v).map_err(homeo_err)
        }
        MapSpec::UnitLift { nodes } => {
            let mut parsed = Vec::with_capacity(nodes.len());
            for (i, (x, y)) in nodes.iter().enumerate() {
                parsed.push((
                    parse_rat(x, &format!("{path}.nodes[{i}].0"))?,
                    parse_rat(y, &format!("{path}.nodes[{i}].1"))?,
                ));
            }
            PLHomeo::unit_lift(parsed).map_err(homeo_err)
        }
    }
}

fn parse_rat_list(items: &[String], path: &str) -> Result<Vec<Rat>, ConfigError> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| parse_rat(s, &format!("{path}[{i}]")))
        .collect()
}
