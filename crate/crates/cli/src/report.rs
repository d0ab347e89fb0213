use std::fmt::Write as _;
use std::path::Path;

use modlab_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::ExperimentConfig;

pub const CSV_HEADER: [&str; 8] =
    ["experiment_id", "check_name", "n_points", "kappa_max", "parameter_json", "residual", "bound", "verdict"];

/// How a residual is compared with its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    /// Positive check: `residual ≤ bound`.
    AtMost,
    /// Negative control: `residual ≥ bound`.
    AtLeast,
    /// Observed datum with no verdict attached.
    Observe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    ExpectedFail,
    Info,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::ExpectedFail => "expected_fail",
            Verdict::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_name: String,
    pub n_points: usize,
    pub kappa_max: f64,
    pub parameters: Map<String, Value>,
    pub residual: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, grid: (usize, f64), params: Value, residual: f64, bound: f64, expect: Expect) -> Self {
        let mut parameters = match params {
            Value::Object(m) => m,
            Value::Null => Map::new(),
            v => Map::from_iter([("value".to_string(), v)]),
        };
        parameters.insert("expect".into(), serde_json::to_value(expect).unwrap());
        let verdict = match expect {
            Expect::AtMost if residual <= bound => Verdict::Pass,
            Expect::AtLeast if residual >= bound => Verdict::ExpectedFail,
            Expect::Observe => Verdict::Info,
            _ => Verdict::Fail,
        };
        Self { check_name: name.into(), n_points: grid.0, kappa_max: grid.1, parameters, residual, bound, verdict }
    }

    pub fn at_most(name: impl Into<String>, grid: (usize, f64), params: Value, residual: f64, bound: f64) -> Self {
        Self::new(name, grid, params, residual, bound, Expect::AtMost)
    }

    pub fn at_least(name: impl Into<String>, grid: (usize, f64), params: Value, residual: f64, bound: f64) -> Self {
        Self::new(name, grid, params, residual, bound, Expect::AtLeast)
    }

    pub fn expect(&self) -> Expect {
        self.parameters.get("expect").and_then(|v| serde_json::from_value(v.clone()).ok()).unwrap_or(Expect::AtMost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment_id: String,
    pub config: ExperimentConfig,
    /// Grid list of a convergence scan; empty for a plain run.
    #[serde(default)]
    pub scan_grids: Vec<usize>,
    pub records: Vec<CheckRecord>,
    pub environment: Environment,
}

impl ExperimentReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| r.verdict == Verdict::Fail)
    }

    pub fn all_pass(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.records.iter().filter(|r| r.verdict == v).count()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.records {
            let params = serde_json::to_string(&r.parameters).map_err(|e| Error::Io(e.to_string()))?;
            w.write_record([
                self.experiment_id.clone(),
                r.check_name.clone(),
                r.n_points.to_string(),
                float(r.kappa_max),
                params,
                float(r.residual),
                float(r.bound),
                r.verdict.as_str().to_string(),
            ])
            .map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    /// Writes `report.json` and `results.csv` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(dir.join("report.json"), json + "\n").map_err(io)?;
        std::fs::write(dir.join("results.csv"), self.to_csv()?).map_err(io)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let p = dir.join("report.json");
        let text = std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
    }

    /// Plain-text summary: counts, then one line per record.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment {}", self.experiment_id);
        let _ = writeln!(
            s,
            "{} checks: {} pass, {} expected_fail, {} fail, {} info",
            self.records.len(),
            self.count(Verdict::Pass),
            self.count(Verdict::ExpectedFail),
            self.count(Verdict::Fail),
            self.count(Verdict::Info),
        );
        let _ = writeln!(
            s,
            "environment: {} {} on {}/{}",
            self.environment.package, self.environment.version, self.environment.os, self.environment.arch
        );
        let width = self.records.iter().map(|r| r.check_name.len()).max().unwrap_or(0);
        for r in &self.records {
            let rel = match r.expect() {
                Expect::AtMost => "<=",
                Expect::AtLeast => ">=",
                Expect::Observe => "  ",
            };
            let _ = writeln!(
                s,
                "{:<13} {:<width$} n={:<5} residual {:.3e} {rel} {:.3e}",
                r.verdict.as_str(),
                r.check_name,
                r.n_points,
                r.residual,
                r.bound,
            );
        }
        s
    }
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn report(records: Vec<CheckRecord>) -> ExperimentReport {
        let config = ExperimentConfig::from_json(r#"{"suite": "fock", "grid": {"n_points": 256}}"#).unwrap();
        ExperimentReport { experiment_id: "x".into(), config, scan_grids: vec![], records, environment: Environment::current() }
    }

    #[test]
    fn verdicts_follow_expectation() {
        let g = (64, 4.0);
        assert_eq!(CheckRecord::at_most("a", g, json!({}), 1e-9, 1e-8).verdict, Verdict::Pass);
        assert_eq!(CheckRecord::at_most("a", g, json!({}), 1e-7, 1e-8).verdict, Verdict::Fail);
        assert_eq!(CheckRecord::at_most("a", g, json!({}), f64::NAN, 1e-8).verdict, Verdict::Fail);
        assert_eq!(CheckRecord::at_least("c", g, json!({}), 0.2, 0.05).verdict, Verdict::ExpectedFail);
        assert_eq!(CheckRecord::at_least("c", g, json!({}), 0.01, 0.05).verdict, Verdict::Fail);
        assert_eq!(CheckRecord::new("o", g, json!(null), 3.0, 0.0, Expect::Observe).verdict, Verdict::Info);
    }

    #[test]
    fn csv_layout() {
        let r = report(vec![CheckRecord::at_most("ccr", (4096, 16.0), json!({"lambda": 0.5}), 0.1, 1.0)]);
        let text = String::from_utf8(r.to_csv().unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(
            lines.next().unwrap(),
            r#"x,ccr,4096,1.6000000000000000e1,"{""expect"":""at_most"",""lambda"":0.5}",1.0000000000000001e-1,1.0000000000000000e0,pass"#
        );
        assert_eq!(float(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn json_round_trip_and_render() {
        let r = report(vec![
            CheckRecord::at_most("a", (8, 1.0), json!({}), 0.5, 1.0),
            CheckRecord::at_least("b", (8, 1.0), json!({}), 0.01, 0.05),
        ]);
        let back: ExperimentReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(!r.all_pass());
        let text = r.render();
        assert!(text.contains("2 checks: 1 pass, 0 expected_fail, 1 fail"));
        assert!(text.lines().any(|l| l.starts_with("fail") && l.contains(" b ")));
    }
}
