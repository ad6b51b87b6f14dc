use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use fracmap_core::calibration::CalibratedConstant;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::{io, LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        assert_eq!(row.len(), self.columns.len(), "row width for table `{}`", self.name);
        if let Some(i) = row.iter().position(|v| !v.is_finite()) {
            return Err(LabError::NonFinite {
                table: self.name.clone(),
                column: self.columns[i].clone(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// One asserted inequality `value <= bound` or `value >= bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub pass: bool,
    /// Wall-clock based; excluded from determinism comparisons.
    #[serde(default)]
    pub timing: bool,
}

impl Verdict {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtMost,
            bound,
            pass: value <= bound,
            timing: false,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtLeast,
            bound,
            pass: value >= bound,
            timing: false,
        }
    }

    /// A yes/no check, recorded as `value = 1` for success.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    pub fn timing(mut self) -> Self {
        self.timing = true;
        self
    }

    /// NaN never passes.
    fn sanitized(mut self) -> Self {
        if self.value.is_nan() {
            self.pass = false;
            self.value = f64::INFINITY;
        }
        self
    }
}

/// What an experiment produces before the runner adds timing.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub parameters: BTreeMap<String, Value>,
    pub tables: Vec<Table>,
    pub constants: Vec<CalibratedConstant>,
    pub verdicts: Vec<Verdict>,
}

impl Outcome {
    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable parameter"));
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v.sanitized());
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub parameters: BTreeMap<String, Value>,
    pub tables: Vec<Table>,
    pub constants: Vec<CalibratedConstant>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
}

impl Report {
    pub fn new(config: ExperimentConfig, outcome: Outcome, wall_clock_seconds: f64) -> Self {
        let passed = !outcome.verdicts.is_empty() && outcome.verdicts.iter().all(|v| v.pass);
        Self {
            config,
            parameters: outcome.parameters,
            tables: outcome.tables,
            constants: outcome.constants,
            verdicts: outcome.verdicts,
            passed,
            wall_clock_seconds,
        }
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn failures(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.pass).collect()
    }

    /// The report with every wall-clock quantity zeroed.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.wall_clock_seconds = 0.0;
        for v in r.verdicts.iter_mut().filter(|v| v.timing) {
            v.value = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `report.json` plus one CSV per table in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let path = dir.join("report.json");
        fs::write(&path, self.to_json()? + "\n").map_err(|e| io(&path, e))?;
        for t in &self.tables {
            t.write_csv(&dir.join(format!("{}.csv", t.name)))?;
        }
        Ok(())
    }
}
