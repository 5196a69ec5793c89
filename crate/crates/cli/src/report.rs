use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use canonical_dpp::table::{CsvTable, SCHEMA_VERSION};
use serde::Serialize;
use serde_json::Value;

/// One acceptance assertion.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

/// Tables, checks and a free-form summary produced by an experiment.
#[derive(Debug, Default)]
pub struct Outcome {
    /// `(file suffix, table)`; the empty suffix is the main table.
    pub tables: Vec<(String, CsvTable)>,
    pub checks: Vec<Check>,
    pub summary: BTreeMap<String, Value>,
}

impl Outcome {
    pub fn table(&mut self, suffix: &str, t: CsvTable) {
        self.tables.push((suffix.into(), t));
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, pass, detail));
    }

    pub fn note<T: Serialize>(&mut self, key: &str, v: T) {
        self.summary.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub experiment: &'a str,
    pub library_version: &'a str,
    pub schema_version: u32,
    pub config: BTreeMap<String, String>,
    pub passed: bool,
    pub checks: &'a [Check],
    pub summary: &'a BTreeMap<String, Value>,
    pub error: Option<String>,
    pub files: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl<'a> Report<'a> {
    pub fn new(experiment: &'a str, config: BTreeMap<String, String>, outcome: &'a Outcome, wall: f64) -> Self {
        Self {
            experiment,
            library_version: env!("CARGO_PKG_VERSION"),
            schema_version: SCHEMA_VERSION,
            config,
            passed: outcome.passed(),
            checks: &outcome.checks,
            summary: &outcome.summary,
            error: None,
            files: Vec::new(),
            wall_clock_seconds: wall,
        }
    }
}

fn csv_name(experiment: &str, suffix: &str) -> String {
    if suffix.is_empty() {
        format!("{experiment}.csv")
    } else {
        format!("{experiment}-{suffix}.csv")
    }
}

/// Write every table and the JSON report into `dir`; returns the paths.
pub fn write(dir: &Path, outcome: &Outcome, report: &mut Report<'_>) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (suffix, t) in &outcome.tables {
        let name = csv_name(report.experiment, suffix);
        let p = dir.join(&name);
        fs::write(&p, t.render())?;
        report.files.push(name);
        paths.push(p);
    }
    let p = dir.join(format!("{}.json", report.experiment));
    let json = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    fs::write(&p, json + "\n")?;
    paths.push(p);
    Ok(paths)
}
