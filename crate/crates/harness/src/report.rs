//! Report records and their JSON / CSV serialisation.

use std::io::Write;

use loctime::stats::{Detail, TestReport};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::ExperimentConfig;
use crate::error::Result;

/// Column order of the CSV output (and key order of the JSON records).
pub const COLUMNS: [&str; 9] =
    ["experiment", "statistic", "p_value", "passed", "n_paths", "dt", "seed", "runtime_ms", "details"];

/// One experiment's outcome as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub experiment: String,
    /// `None` when the statistic is not finite.
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub passed: bool,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub runtime_ms: u64,
    pub details: Map<String, Value>,
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn detail_value(d: &Detail) -> Value {
    match d {
        Detail::Bool(b) => Value::Bool(*b),
        Detail::Num(v) => num(*v),
        Detail::Text(s) => Value::String(s.clone()),
        Detail::List(v) => Value::Array(v.iter().map(|x| num(*x)).collect()),
    }
}

impl ReportRecord {
    pub fn from_report(report: &TestReport, cfg: &ExperimentConfig, adjudication: bool, runtime_ms: u64) -> Self {
        let mut details: Map<String, Value> =
            report.details.iter().map(|(k, v)| (k.clone(), detail_value(v))).collect();
        details.insert("adjudication".into(), Value::Bool(adjudication));
        details.insert("bias_tolerance".into(), num(cfg.bias_tolerance));
        if !cfg.params.is_empty() {
            details.insert("params".into(), serde_json::to_value(&cfg.params).unwrap_or(Value::Null));
        }
        Self {
            experiment: cfg.name.clone(),
            statistic: report.statistic.is_finite().then_some(report.statistic),
            p_value: report.p_value.filter(|p| p.is_finite()),
            passed: report.passed,
            n_paths: cfg.n_paths,
            dt: cfg.dt,
            seed: cfg.seed,
            runtime_ms,
            details,
        }
    }

    /// A failed record for an experiment that raised an error.
    pub fn failure(cfg: &ExperimentConfig, adjudication: bool, error: &str) -> Self {
        let mut details = Map::new();
        details.insert("adjudication".into(), Value::Bool(adjudication));
        details.insert("error".into(), Value::String(error.to_string()));
        Self {
            experiment: cfg.name.clone(),
            statistic: None,
            p_value: None,
            passed: false,
            n_paths: cfg.n_paths,
            dt: cfg.dt,
            seed: cfg.seed,
            runtime_ms: 0,
            details,
        }
    }

    pub fn is_adjudication(&self) -> bool {
        self.details.get("adjudication") == Some(&Value::Bool(true))
    }

    /// Adjudications never gate: they count as passing unless they errored.
    pub fn gates_ok(&self) -> bool {
        self.passed || (self.is_adjudication() && !self.details.contains_key("error"))
    }

    fn csv_row(&self) -> Result<[String; 9]> {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        Ok([
            self.experiment.clone(),
            opt(self.statistic),
            opt(self.p_value),
            self.passed.to_string(),
            self.n_paths.to_string(),
            self.dt.to_string(),
            self.seed.to_string(),
            self.runtime_ms.to_string(),
            serde_json::to_string(&self.details)?,
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub suite: String,
    pub seed: u64,
    pub wall_clock_ms: u64,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub adjudications: usize,
    pub config: Value,
    pub reports: Vec<ReportRecord>,
}

impl SuiteReport {
    pub fn new(suite: &str, seed: u64, config: Value, reports: Vec<ReportRecord>, wall_clock_ms: u64) -> Self {
        let passed = reports.iter().filter(|r| r.passed).count();
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            suite: suite.to_string(),
            seed,
            wall_clock_ms,
            total: reports.len(),
            passed,
            failed: reports.len() - passed,
            adjudications: reports.iter().filter(|r| r.is_adjudication()).count(),
            config,
            reports,
        }
    }

    /// Whether every non-adjudication experiment passed.
    pub fn all_gating_passed(&self) -> bool {
        self.reports.iter().all(ReportRecord::gates_ok)
    }

    pub fn counts_consistent(&self) -> bool {
        self.total == self.reports.len()
            && self.passed + self.failed == self.total
            && self.passed == self.reports.iter().filter(|r| r.passed).count()
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_json<T: Serialize>(value: &T, path: &std::path::Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(to_json(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn write_csv<W: Write>(records: &[ReportRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(r.csv_row()?)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, Settings, Suite};

    fn record() -> ReportRecord {
        let cfg = ExperimentConfig::resolve("pitman", Suite::Quick, None, &Settings::default()).unwrap();
        let rep = TestReport::new("x", f64::NAN, Some(0.5), true, vec![3]).with("list", vec![1.0, f64::INFINITY]);
        ReportRecord::from_report(&rep, &cfg, false, 0)
    }

    #[test]
    fn json_keys_in_order() {
        let s = serde_json::to_string(&record()).unwrap();
        let pos: Vec<usize> = COLUMNS.iter().map(|k| s.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(s.contains("\"statistic\":null"));
        let back: ReportRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back, record());
    }

    #[test]
    fn csv_header_and_rows() {
        let mut buf = Vec::new();
        write_csv(&[record(), record()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("experiment,statistic,p_value,passed,n_paths,dt,seed,runtime_ms,details\n"));
        assert_eq!(csv::Reader::from_reader(text.as_bytes()).records().count(), 2);
    }
}
