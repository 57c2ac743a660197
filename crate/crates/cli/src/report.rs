//! Experiment reports: metrics, verdicts against explicit thresholds, CSV
//! tables and the files written for them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
}

/// One pass/fail decision. `observed` is a recorded metric and `threshold`
/// the declared bound it is compared against.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub id: String,
    pub description: String,
    pub observed: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

impl Verdict {
    pub fn new(id: impl Into<String>, description: impl Into<String>, observed: f64, relation: Relation, threshold: f64) -> Self {
        let passed = match relation {
            Relation::AtMost => observed <= threshold,
            Relation::AtLeast => observed >= threshold,
            Relation::Above => observed > threshold,
        };
        Self { id: id.into(), description: description.into(), observed, relation, threshold, passed }
    }

    pub fn at_most(id: impl Into<String>, description: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self::new(id, description, observed, Relation::AtMost, threshold)
    }

    pub fn at_least(id: impl Into<String>, description: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self::new(id, description, observed, Relation::AtLeast, threshold)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub name: &'static str,
    pub description: &'static str,
}

pub const fn col(name: &'static str, description: &'static str) -> Column {
    Column { name, description }
}

/// A CSV file. Cells are pre-formatted so reruns are byte-identical.
#[derive(Debug, Clone)]
pub struct Table {
    pub file: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: impl Into<String>, columns: Vec<Column>) -> Self {
        Self { file: file.into(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip formatting.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// What an experiment hands back before anything is written.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Resolved settings, defaults included.
    pub settings: Value,
    pub metrics: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<Table>,
    /// `(file name, SVG document)`.
    pub plots: Vec<(String, String)>,
}

impl Outcome {
    pub fn metric(&mut self, key: impl Into<String>, value: impl Serialize) {
        self.metrics.insert(key.into(), serde_json::to_value(value).expect("metrics serialize"));
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

#[derive(Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub tool_version: &'static str,
    pub model: String,
    /// The config document after overrides.
    pub config: Value,
    pub settings: Value,
    pub metrics: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    pub artifacts: Vec<String>,
    /// Column documentation for every CSV artifact.
    pub columns: BTreeMap<String, Vec<Column>>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Writes tables, plots and `report.json` into `dir`.
pub fn write(dir: &Path, experiment: &str, model: &str, config: Value, outcome: Outcome) -> Result<ExperimentReport, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut artifacts = Vec::new();
    let mut columns = BTreeMap::new();
    for table in &outcome.tables {
        let path = dir.join(&table.file);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(table.columns.iter().map(|c| c.name))?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(io_err(&path))?;
        artifacts.push(table.file.clone());
        columns.insert(table.file.clone(), table.columns.clone());
    }
    for (file, svg) in &outcome.plots {
        let path = dir.join(file);
        fs::write(&path, svg).map_err(io_err(&path))?;
        artifacts.push(file.clone());
    }
    artifacts.push("report.json".into());
    let passed = outcome.passed();
    let report = ExperimentReport {
        experiment: experiment.into(),
        tool_version: env!("CARGO_PKG_VERSION"),
        model: model.into(),
        config,
        settings: outcome.settings,
        metrics: outcome.metrics,
        verdicts: outcome.verdicts,
        passed,
        artifacts,
        columns,
    };
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(report)
}
