//! Experiment runner: configuration, suite execution, convergence scans and report output.

pub mod config;
pub mod report;
pub mod suites;

use modlab_core::relations::is_monotone_decreasing;
use modlab_core::{Error, GridSpec, Result};
use serde_json::json;

pub use config::{ExperimentConfig, GridConfig, Suite, Tolerances};
pub use report::{CheckRecord, Environment, Expect, ExperimentReport, Verdict};

/// Residuals this many times below their bound count as converged in scan summaries.
pub const SCAN_FLOOR_FACTOR: f64 = 1e-3;

/// Executes the configured suite in declared check order.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let records = suites::run_suite(cfg.suite, cfg, None)?;
    Ok(ExperimentReport {
        experiment_id: format!("{}-n{}-seed{}", cfg.suite, cfg.grid.n_points, cfg.seed),
        config: cfg.clone(),
        scan_grids: Vec::new(),
        records,
        environment: Environment::current(),
    })
}

/// Runs the grid-scalable checks of the suite at every size in `grids` and appends one
/// summary row per check: a monotonicity verdict for positive checks, the smallest residual
/// for negative controls. A single grid gets no summary.
pub fn convergence_scan(cfg: &ExperimentConfig, grids: &[usize]) -> Result<ExperimentReport> {
    cfg.validate()?;
    if grids.is_empty() {
        return Err(Error::Config("empty grid list".into()));
    }
    if grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("grid list {grids:?} is not strictly increasing")));
    }
    let suites = if cfg.suite == Suite::All { Suite::ALL.to_vec() } else { vec![cfg.suite] };
    if !suites.iter().any(|&s| suites::scalable(s)) {
        return Err(Error::Config(format!("suite {} has no grid-dependent checks", cfg.suite)));
    }
    for &n in grids {
        GridSpec::new(n, cfg.grid.window()).map_err(|e| Error::Config(format!("grid {n}: {e}")))?;
    }
    let mut records = Vec::new();
    for &n in grids {
        records.extend(suites::run_suite(cfg.suite, cfg, Some(n))?);
    }
    if grids.len() > 1 {
        let summary = summarize(&records, grids, cfg.tolerances.scan_noise);
        records.extend(summary);
    }
    let list = grids.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("_");
    Ok(ExperimentReport {
        experiment_id: format!("{}-scan{}-seed{}", cfg.suite, list, cfg.seed),
        config: cfg.clone(),
        scan_grids: grids.to_vec(),
        records,
        environment: Environment::current(),
    })
}

fn summarize(records: &[CheckRecord], grids: &[usize], noise: f64) -> Vec<CheckRecord> {
    let mut names: Vec<&str> = Vec::new();
    for r in records {
        if !names.contains(&r.check_name.as_str()) {
            names.push(&r.check_name);
        }
    }
    let mut out = Vec::new();
    for name in names {
        let rows: Vec<&CheckRecord> = records.iter().filter(|r| r.check_name == name).collect();
        let last = rows[rows.len() - 1];
        let residuals: Vec<f64> = rows.iter().map(|r| r.residual).collect();
        let params = json!({"grids": grids, "residuals": residuals});
        let at = (last.n_points, last.kappa_max);
        match last.expect() {
            Expect::AtMost => {
                let floor = SCAN_FLOOR_FACTOR * last.bound;
                // Worst refinement ratio; NaN propagates so that it fails the comparison.
                let worst = residuals
                    .windows(2)
                    .filter(|w| !(w[0] <= floor && w[1] <= floor))
                    .map(|w| w[1] / w[0])
                    .fold(0.0, |a: f64, r| if a.is_nan() || r.is_nan() { f64::NAN } else { a.max(r) });
                debug_assert_eq!(worst <= 1.0 + noise, is_monotone_decreasing(&residuals, noise, floor));
                out.push(CheckRecord::at_most(format!("monotone:{name}"), at, params, worst, 1.0 + noise));
            }
            Expect::AtLeast => {
                let min = residuals.iter().copied().fold(f64::INFINITY, f64::min);
                out.push(CheckRecord::at_least(format!("min:{name}"), at, params, min, last.bound));
            }
            Expect::Observe => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(name: &str, n: usize, residual: f64, expect: Expect) -> CheckRecord {
        CheckRecord::new(name, (n, 1.0), json!({}), residual, if expect == Expect::AtLeast { 0.05 } else { 1e-6 }, expect)
    }

    #[test]
    fn summary_rows() {
        let recs = vec![
            rec("a", 256, 1e-7, Expect::AtMost),
            rec("c", 256, 0.3, Expect::AtLeast),
            rec("a", 512, 5e-8, Expect::AtMost),
            rec("c", 512, 0.2, Expect::AtLeast),
            rec("o", 512, 0.2, Expect::Observe),
        ];
        let s = summarize(&recs, &[256, 512], 0.1);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].check_name, "monotone:a");
        assert_eq!(s[0].verdict, Verdict::Pass);
        assert!((s[0].residual - 0.5).abs() < 1e-12);
        assert_eq!(s[1].check_name, "min:c");
        assert_eq!((s[1].residual, s[1].verdict), (0.2, Verdict::ExpectedFail));
        let up = summarize(&[rec("a", 256, 1e-7, Expect::AtMost), rec("a", 512, 3e-7, Expect::AtMost)], &[256, 512], 0.1);
        assert_eq!(up[0].verdict, Verdict::Fail);
        let converged = summarize(&[rec("a", 256, 1e-15, Expect::AtMost), rec("a", 512, 3e-15, Expect::AtMost)], &[256, 512], 0.1);
        assert_eq!(converged[0].verdict, Verdict::Pass);
    }

    #[test]
    fn scan_rejects_bad_grid_lists() {
        let cfg = ExperimentConfig::from_json(r#"{"suite": "freefield", "grid": {"n_points": 512}}"#).unwrap();
        assert!(matches!(convergence_scan(&cfg, &[512, 256]), Err(Error::Config(_))));
        assert!(matches!(convergence_scan(&cfg, &[]), Err(Error::Config(_))));
        let fock = ExperimentConfig { suite: Suite::Fock, ..cfg };
        assert!(matches!(convergence_scan(&fock, &[256, 512]), Err(Error::Config(_))));
    }
}
