//! Report schema and CSV export.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Result;
use crate::harness::config::ResolvedConfig;
use crate::model::LimitParams;

/// A single pass/fail comparison. `value` is `None` when it could not be computed.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub passed: bool,
    pub detail: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>, value: Option<f64>, target: Option<f64>, tolerance: Option<f64>, passed: bool) -> Self {
        Check { name: name.into(), value, target, tolerance, passed, detail: None }
    }

    /// `|value - target| <= tol |target|`.
    pub fn relative(name: impl Into<String>, value: Option<f64>, target: f64, tol: f64) -> Self {
        let passed = value.is_some_and(|v| (v - target).abs() <= tol * target.abs());
        Self::new(name, value, Some(target), Some(tol), passed)
    }

    /// `|value - target| <= tol`.
    pub fn absolute(name: impl Into<String>, value: Option<f64>, target: f64, tol: f64) -> Self {
        let passed = value.is_some_and(|v| (v - target).abs() <= tol);
        Self::new(name, value, Some(target), Some(tol), passed)
    }

    pub fn at_most(name: impl Into<String>, value: Option<f64>, bound: f64) -> Self {
        let passed = value.is_some_and(|v| v <= bound);
        Self::new(name, value, None, Some(bound), passed)
    }

    pub fn at_least(name: impl Into<String>, value: Option<f64>, bound: f64) -> Self {
        let passed = value.is_some_and(|v| v >= bound);
        Self::new(name, value, None, Some(bound), passed)
    }

    /// `lo < value < hi`.
    pub fn inside(name: impl Into<String>, value: Option<f64>, lo: f64, hi: f64) -> Self {
        let passed = value.is_some_and(|v| v > lo && v < hi);
        Self::new(name, value, None, None, passed).with_detail(format!("open interval ({lo}, {hi})"))
    }

    pub fn flag(name: impl Into<String>, passed: bool) -> Self {
        Self::new(name, None, None, None, passed)
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn new(id: u32, name: impl Into<String>, checks: Vec<Check>) -> Self {
        let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
        Criterion { id, name: name.into(), passed, checks }
    }

    /// One line: `criterion <id> <name>: PASS|FAIL` followed by failing checks.
    pub fn summary_line(&self) -> String {
        let mut s = format!("criterion {:>2} {}: {}", self.id, self.name, if self.passed { "PASS" } else { "FAIL" });
        let failing: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| match (c.value, c.target, c.tolerance) {
                (Some(v), Some(t), _) => format!("{} = {v:.4} (target {t:.4})", c.name),
                (Some(v), None, Some(b)) => format!("{} = {v:.4} (bound {b})", c.name),
                _ => c.name.clone(),
            })
            .collect();
        if !failing.is_empty() {
            s.push_str(&format!(" [{}]", failing.join("; ")));
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: String,
    pub config: ResolvedConfig,
    pub limit_params: Option<LimitParams>,
    pub statistics: Map<String, Value>,
    /// Coalescent condition statistics and excursion samples (null elsewhere).
    pub coalescent: Value,
    pub criteria: Vec<Criterion>,
    /// Checks that are reported but do not decide the exit status.
    pub diagnostics: Vec<Check>,
    pub all_pass: bool,
    pub runtime_secs: f64,
    pub capped: u64,
    pub flagged: u64,
    pub errors: Vec<String>,
    pub sample_files: Vec<String>,
}

impl Report {
    pub fn new(config: ResolvedConfig) -> Self {
        Report {
            experiment: config.experiment.name().to_string(),
            config,
            limit_params: None,
            statistics: Map::new(),
            coalescent: Value::Null,
            criteria: Vec::new(),
            diagnostics: Vec::new(),
            all_pass: false,
            runtime_secs: 0.0,
            capped: 0,
            flagged: 0,
            errors: Vec::new(),
            sample_files: Vec::new(),
        }
    }

    pub fn stat<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.statistics.insert(key.to_string(), v);
    }

    pub fn criterion(&mut self, id: u32, name: &str, checks: Vec<Check>) {
        self.criteria.push(Criterion::new(id, name, checks));
    }

    pub fn criterion_lines(&self) -> Vec<String> {
        self.criteria.iter().map(Criterion::summary_line).collect()
    }

    /// Writes `samples_<name>.csv` into the output directory, if one is set.
    pub fn write_samples(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let Some(dir) = self.config.out.clone() else {
            return Ok(());
        };
        let file = format!("samples_{name}.csv");
        write_csv(&dir.join(&file), header, rows)?;
        self.sample_files.push(file);
        Ok(())
    }

    pub fn write_json(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("report.json"))?);
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }
}

/// Header row, comma separated, round-trip float formatting, LF endings.
/// Non-finite values are written as empty fields.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> =
            row.iter().map(|v| if v.is_finite() { format!("{v:?}") } else { String::new() }).collect();
        writeln!(f, "{}", cells.join(","))?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_constructors() {
        assert!(Check::relative("x", Some(1.05), 1.0, 0.1).passed);
        assert!(!Check::relative("x", Some(1.2), 1.0, 0.1).passed);
        assert!(!Check::relative("x", None, 1.0, 0.1).passed);
        assert!(Check::at_most("x", Some(0.0), 0.0).passed);
        assert!(!Check::at_least("x", Some(f64::NAN), 0.0).passed);
        assert!(!Criterion::new(1, "empty", vec![]).passed);
        let c = Criterion::new(2, "c", vec![Check::flag("a", true), Check::at_most("b", Some(2.0), 1.0)]);
        assert!(!c.passed);
        assert!(c.summary_line().contains("FAIL") && c.summary_line().contains("b = 2.0000 (bound 1)"));
    }

    #[test]
    fn csv_format() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_csv(&p, &["a", "b"], &[vec![0.5, 1.0], vec![f64::NAN, 2e-20]]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "a,b\n0.5,1.0\n,2e-20\n");
    }
}
