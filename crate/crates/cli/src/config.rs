//! Experiment configuration files.
//!
//! A config is a JSON object:
//!
//! ```json
//! {
//!   "experiment": "lln",
//!   "model": { "fixture": "alternating_sqrt" },
//!   "parameters": { "n": [8, 16, 32, 64, 128] },
//!   "output": "out/lln"
//! }
//! ```
//!
//! `model` is `{"fixture": name}`, `{"sequence": {...}}` or
//! `{"family": {"outcomes": [...], "measures": [[...]]}}`. Every parameter is
//! optional; each experiment accepts only its own keys and fills the rest
//! with defaults. `--set a.b=v` replaces the value at a dotted path before
//! the document is interpreted; `v` is read as JSON when it parses, as a
//! string otherwise.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sublin_core::fixtures::{family_fixture, list_fixtures, sequence_fixture, FixtureKind};
use sublin_core::lipschitz::FunctionSpec;
use sublin_core::montecarlo::Policy;
use sublin_core::pde::Boundary;
use sublin_core::recursion::RecursionConfig;
use sublin_core::{MeasureFamily, SequenceModel};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Axioms,
    Lln,
    Slln,
    Wlln,
    Pde,
    Oracle,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Axioms => "axioms",
            ExperimentKind::Lln => "lln",
            ExperimentKind::Slln => "slln",
            ExperimentKind::Wlln => "wlln",
            ExperimentKind::Pde => "pde",
            ExperimentKind::Oracle => "oracle",
        }
    }

    /// Parameter keys the experiment reads.
    fn keys(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Axioms => &["seed", "samples", "threshold", "moment_order"],
            ExperimentKind::Lln => &["n", "phi", "recursion", "gap_tolerance"],
            ExperimentKind::Slln => &[
                "seed",
                "horizon",
                "paths",
                "eps",
                "band_start",
                "tail_start",
                "target",
                "policies",
                "band_fraction",
                "reach_fraction",
                "approach_fraction",
                "fan_paths",
            ],
            ExperimentKind::Wlln => &["n", "eps", "delta", "recursion", "tail_max", "band_min"],
            ExperimentKind::Pde => &[
                "h",
                "dx",
                "cfl",
                "region",
                "functions",
                "boundary",
                "max_error",
                "min_ratio",
                "exact_floor",
            ],
            ExperimentKind::Oracle => &["n", "mean_points", "phi", "tolerance", "strategy_cap"],
        }
    }

    fn needs_family(self) -> bool {
        self == ExperimentKind::Axioms
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Fixture(String),
    Sequence(SequenceModel),
    Family(MeasureFamily),
}

/// A policy with the name used in tables and plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPolicy {
    pub name: String,
    pub policy: Policy,
}

/// Union of every experiment's knobs; unset keys take per-experiment defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub seed: Option<u64>,
    pub n: Option<Vec<usize>>,
    pub phi: Option<FunctionSpec>,
    pub recursion: Option<RecursionConfig>,
    pub gap_tolerance: Option<f64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub tail_max: Option<f64>,
    pub band_min: Option<f64>,
    pub horizon: Option<usize>,
    pub paths: Option<usize>,
    pub band_start: Option<usize>,
    pub tail_start: Option<usize>,
    pub target: Option<f64>,
    pub policies: Option<Vec<NamedPolicy>>,
    pub band_fraction: Option<f64>,
    pub reach_fraction: Option<f64>,
    pub approach_fraction: Option<f64>,
    pub fan_paths: Option<usize>,
    pub h: Option<f64>,
    pub dx: Option<Vec<f64>>,
    pub cfl: Option<f64>,
    pub region: Option<(f64, f64)>,
    pub functions: Option<Vec<FunctionSpec>>,
    pub boundary: Option<Boundary>,
    pub max_error: Option<f64>,
    pub min_ratio: Option<f64>,
    pub exact_floor: Option<f64>,
    pub mean_points: Option<Vec<usize>>,
    pub tolerance: Option<f64>,
    pub strategy_cap: Option<u64>,
    pub samples: Option<usize>,
    pub threshold: Option<f64>,
    pub moment_order: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub parameters: Parameters,
    pub output: PathBuf,
}

/// The model a config resolves to.
#[derive(Debug, Clone)]
pub enum Model {
    Sequence(SequenceModel),
    Family(MeasureFamily),
}

/// A validated config together with the document it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// The document after overrides, echoed into the report.
    pub document: Value,
    pub model: Model,
    /// Label for the model in reports: the fixture name or "inline".
    pub model_label: String,
}

/// Where a problem sits: file line when the key appears in the file, the
/// flag when an override set it.
struct Locator<'a> {
    path: &'a Path,
    text: &'a str,
    overridden: Vec<String>,
}

impl Locator<'_> {
    fn error(&self, key: &str, message: impl std::fmt::Display) -> CliError {
        if self.overridden.iter().any(|o| key == o || key.starts_with(&format!("{o}."))) {
            return CliError::Config(format!("--set {key}: {message}"));
        }
        match find_line(self.text, key) {
            Some(line) => CliError::Config(format!("{}:{line}: {key}: {message}", self.path.display())),
            None => CliError::Config(format!("{}: {key}: {message}", self.path.display())),
        }
    }
}

/// Line of the last segment of a dotted key, found by scanning for each
/// segment in turn.
fn find_line(text: &str, key: &str) -> Option<usize> {
    let mut offset = 0;
    for segment in key.split('.') {
        if segment.parse::<usize>().is_ok() {
            continue;
        }
        let needle = format!("\"{segment}\"");
        offset += text[offset..].find(&needle)?;
        offset += needle.len();
    }
    Some(text[..offset].lines().count().max(1))
}

/// serde_json's message without its trailing position.
fn strip_position(err: &serde_json::Error) -> String {
    let msg = err.to_string();
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    }
}

fn parse_override(raw: &str) -> Result<(Vec<String>, Value), CliError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {raw}: expected key=value")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!("--set {raw}: malformed key")));
    }
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((key.split('.').map(str::to_string).collect(), value))
}

fn apply_override(doc: &mut Value, path: &[String], value: Value) -> Result<(), String> {
    let mut cur = doc;
    for (i, seg) in path.iter().enumerate() {
        let last = i + 1 == path.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(seg.clone(), value);
                    return Ok(());
                }
                map.entry(seg.clone()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| format!("{seg} is not an array index"))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| format!("index {idx} out of range (length {len})"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(format!("{} is not an object or array", path[..i].join("."))),
        };
    }
    Ok(())
}

/// Reads, overrides, parses and validates a config file.
pub fn load(path: &Path, overrides: &[String]) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let located = |e: serde_json::Error| {
        CliError::Config(format!("{}:{}:{}: {}", path.display(), e.line(), e.column(), strip_position(&e)))
    };
    let mut document: Value = serde_json::from_str(&text).map_err(located)?;
    // Errors in the file itself are reported against the file.
    let mut config: ExperimentConfig = serde_json::from_str(&text).map_err(located)?;

    let mut overridden = Vec::new();
    for raw in overrides {
        let (key, value) = parse_override(raw)?;
        apply_override(&mut document, &key, value).map_err(|e| CliError::Config(format!("--set {raw}: {e}")))?;
        overridden.push(key.join("."));
    }
    if !overrides.is_empty() {
        config = serde_json::from_value(document.clone())
            .map_err(|e| CliError::Config(format!("after --set overrides: {}", strip_position(&e))))?;
    }

    let locator = Locator { path, text: &text, overridden };
    check_parameter_keys(&config, &document, &locator)?;
    validate_parameters(&config, &locator)?;
    let (model, model_label) = resolve_model(&config, &locator)?;
    Ok(LoadedConfig { config, document, model, model_label })
}

fn check_parameter_keys(config: &ExperimentConfig, document: &Value, loc: &Locator) -> Result<(), CliError> {
    let allowed = config.experiment.keys();
    if let Some(Value::Object(params)) = document.get("parameters") {
        for key in params.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(loc.error(
                    &format!("parameters.{key}"),
                    format!(
                        "not used by experiment {}; accepted keys are {}",
                        config.experiment.as_str(),
                        allowed.join(", ")
                    ),
                ));
            }
        }
    }
    Ok(())
}

fn positive(loc: &Locator, key: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(loc.error(&format!("parameters.{key}"), format!("must be positive, got {x}"))),
        _ => Ok(()),
    }
}

fn fraction(loc: &Locator, key: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(0.0..=1.0).contains(&x) => Err(loc.error(&format!("parameters.{key}"), format!("must lie in [0, 1], got {x}"))),
        _ => Ok(()),
    }
}

fn nonempty_counts(loc: &Locator, key: &str, v: &Option<Vec<usize>>) -> Result<(), CliError> {
    match v {
        Some(list) if list.is_empty() => Err(loc.error(&format!("parameters.{key}"), "must be a nonempty list")),
        Some(list) if list.contains(&0) => Err(loc.error(&format!("parameters.{key}"), "entries must be at least 1")),
        _ => Ok(()),
    }
}

fn validate_parameters(config: &ExperimentConfig, loc: &Locator) -> Result<(), CliError> {
    let p = &config.parameters;
    for (key, v) in [
        ("gap_tolerance", p.gap_tolerance),
        ("eps", p.eps),
        ("delta", p.delta),
        ("h", p.h),
        ("cfl", p.cfl),
        ("min_ratio", p.min_ratio),
        ("max_error", p.max_error),
        ("tolerance", p.tolerance),
        ("threshold", p.threshold),
    ] {
        positive(loc, key, v)?;
    }
    if let Some(x) = p.exact_floor {
        if !(x >= 0.0) {
            return Err(loc.error("parameters.exact_floor", format!("must be non-negative, got {x}")));
        }
    }
    for (key, v) in [
        ("tail_max", p.tail_max),
        ("band_min", p.band_min),
        ("band_fraction", p.band_fraction),
        ("reach_fraction", p.reach_fraction),
        ("approach_fraction", p.approach_fraction),
    ] {
        fraction(loc, key, v)?;
    }
    if let Some(c) = p.cfl {
        if c > 1.0 {
            return Err(loc.error("parameters.cfl", format!("must lie in (0, 1], got {c}")));
        }
    }
    nonempty_counts(loc, "n", &p.n)?;
    nonempty_counts(loc, "mean_points", &p.mean_points)?;
    if let Some(dx) = &p.dx {
        if dx.is_empty() || dx.iter().any(|d| !(*d > 0.0)) {
            return Err(loc.error("parameters.dx", "must be a nonempty list of positive spacings"));
        }
    }
    if let Some((a, b)) = p.region {
        if !(a < b) {
            return Err(loc.error("parameters.region", format!("needs lo < hi, got [{a}, {b}]")));
        }
    }
    if let Some(f) = &p.functions {
        if f.is_empty() {
            return Err(loc.error("parameters.functions", "must be a nonempty list"));
        }
    }
    if let Some(ps) = &p.policies {
        if ps.is_empty() {
            return Err(loc.error("parameters.policies", "must be a nonempty list"));
        }
    }
    for (key, v) in [("paths", p.paths), ("samples", p.samples)] {
        if v == Some(0) {
            return Err(loc.error(&format!("parameters.{key}"), "must be at least 1"));
        }
    }
    if p.moment_order == Some(0) {
        return Err(loc.error("parameters.moment_order", "must be at least 1"));
    }
    let horizon = p.horizon.unwrap_or(crate::experiments::slln::DEFAULT_HORIZON);
    if config.experiment == ExperimentKind::Slln {
        if horizon < 2 {
            return Err(loc.error("parameters.horizon", "must be at least 2"));
        }
        for (key, v) in [("band_start", p.band_start), ("tail_start", p.tail_start)] {
            if let Some(s) = v {
                if s == 0 || s >= horizon {
                    return Err(loc.error(&format!("parameters.{key}"), format!("must lie in 1..{horizon}, got {s}")));
                }
            }
        }
    }
    Ok(())
}

fn resolve_model(config: &ExperimentConfig, loc: &Locator) -> Result<(Model, String), CliError> {
    let kind = config.experiment;
    let spec = match &config.model {
        Some(spec) => spec.clone(),
        None if kind.needs_family() => ModelSpec::Fixture("two_point_ambiguity".into()),
        None => return Err(loc.error("model", format!("experiment {} needs a sequence model", kind.as_str()))),
    };
    let (model, label) = match spec {
        ModelSpec::Fixture(name) => {
            let fixture = list_fixtures().iter().find(|f| f.name == name).ok_or_else(|| {
                let names: Vec<&str> = list_fixtures().iter().map(|f| f.name).collect();
                loc.error("model.fixture", format!("unknown fixture {name:?}; available: {}", names.join(", ")))
            })?;
            let model = match fixture.kind {
                FixtureKind::Sequence => Model::Sequence(sequence_fixture(&name)?),
                FixtureKind::Family => Model::Family(family_fixture(&name)?),
            };
            (model, name)
        }
        ModelSpec::Sequence(m) => (Model::Sequence(m), "inline".into()),
        ModelSpec::Family(f) => (Model::Family(f), "inline".into()),
    };
    match (&model, kind.needs_family()) {
        (Model::Family(_), false) => Err(loc.error(
            "model",
            format!("experiment {} needs a sequence model, got a measure family", kind.as_str()),
        )),
        (Model::Sequence(_), true) => Err(loc.error("model", "experiment axioms needs a measure family, got a sequence model")),
        _ => Ok((model, label)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_and_replace() {
        let mut doc: Value = serde_json::json!({"parameters": {"dx": [0.1, 0.2]}});
        let (k, v) = parse_override("parameters.eps=0.3").unwrap();
        apply_override(&mut doc, &k, v).unwrap();
        let (k, v) = parse_override("parameters.dx.1=0.05").unwrap();
        apply_override(&mut doc, &k, v).unwrap();
        let (k, v) = parse_override("output=out/x").unwrap();
        apply_override(&mut doc, &k, v).unwrap();
        assert_eq!(doc["parameters"]["eps"], 0.3);
        assert_eq!(doc["parameters"]["dx"][1], 0.05);
        assert_eq!(doc["output"], "out/x");
        let (k, v) = parse_override("parameters.dx.7=1").unwrap();
        assert!(apply_override(&mut doc, &k, v).is_err());
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn keys_are_found_by_line() {
        let text = "{\n  \"output\": \"x\",\n  \"parameters\": {\n    \"eps\": -1\n  }\n}\n";
        assert_eq!(find_line(text, "parameters.eps"), Some(4));
        assert_eq!(find_line(text, "output"), Some(2));
        assert_eq!(find_line(text, "parameters.delta"), None);
    }
}
