//! Report envelope and file emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::{Arithmetic, ExperimentConfig};
use crate::error::LabError;

/// One named check inside a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Environment {
    pub generator: String,
    pub arithmetic: Arithmetic,
    pub nfl_core_version: String,
}

/// Long-format table written as `<stem>.csv` (or `<stem>_<name>.csv`).
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    /// Empty for the primary table.
    pub name: String,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: &str, headers: &[&'static str]) -> Self {
        Self { name: name.into(), headers: headers.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub check: String,
    pub parameters: ExperimentConfig,
    pub checks: Vec<CheckOutcome>,
    pub per_algorithm: Vec<Value>,
    pub max_deviation: f64,
    pub pass: bool,
    pub details: Value,
    pub environment: Environment,
    #[serde(skip)]
    pub tables: Vec<CsvTable>,
}

impl ExperimentReport {
    pub fn new(
        config: &ExperimentConfig,
        checks: Vec<CheckOutcome>,
        per_algorithm: Vec<Value>,
        max_deviation: f64,
        details: Value,
        tables: Vec<CsvTable>,
    ) -> Self {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self {
            check: config.kind.name().to_string(),
            parameters: config.clone(),
            checks,
            per_algorithm,
            max_deviation,
            pass,
            details,
            environment: Environment {
                generator: nfl_core::rng::GENERATOR.to_string(),
                arithmetic: config.arithmetic,
                nfl_core_version: env!("CARGO_PKG_VERSION").to_string(),
            },
            tables,
        }
    }

    pub fn to_json(&self) -> Result<String, LabError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Writes `<stem>.json` and one CSV per table; returns the paths.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, LabError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| LabError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let json_path = dir.join(format!("{stem}.json"));
        fs::write(&json_path, self.to_json()?).map_err(io(&json_path))?;
        let mut written = vec![json_path];
        for table in &self.tables {
            let file = if table.name.is_empty() {
                format!("{stem}.csv")
            } else {
                format!("{stem}_{}.csv", table.name)
            };
            let path = dir.join(file);
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(&table.headers)?;
            for row in &table.rows {
                w.write_record(row)?;
            }
            w.flush().map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}
