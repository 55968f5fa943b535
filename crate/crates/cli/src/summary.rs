//! Run summaries: `summary.txt` (`key: value` lines) and `summary.json`.
//! Timings are kept in memory and printed, never written, so that output
//! files of identical runs compare equal byte for byte.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use bipotential::csvio;
use serde_json::{json, Map, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// `(key, value)` pairs, in insertion order.
    pub details: Vec<(String, f64)>,
    /// Artifact holding the data behind this check.
    pub source: Option<String>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub command: String,
    pub checks: Vec<Check>,
    pub info: Vec<(String, String)>,
    pub manifest: Vec<String>,
    pub timings: Vec<(String, Duration)>,
    out_dir: PathBuf,
}

impl RunSummary {
    pub fn new(command: &str, out_dir: &Path) -> Self {
        RunSummary {
            command: command.to_string(),
            checks: Vec::new(),
            info: Vec::new(),
            manifest: Vec::new(),
            timings: Vec::new(),
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn info(&mut self, key: &str, value: impl ToString) {
        self.info.push((key.to_string(), value.to_string()));
    }

    pub fn check(&mut self, name: &str, pass: bool, details: &[(&str, f64)], source: Option<&str>) {
        self.checks.push(Check {
            name: name.to_string(),
            pass,
            details: details.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            source: source.map(str::to_string),
        });
    }

    /// Path for an artifact; the name goes into the manifest once `write`
    /// succeeds.
    pub fn artifact<F>(&mut self, name: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&Path) -> bipotential::Result<()>,
    {
        let path = self.out_dir.join(name);
        write(&path).map_err(CliError::from_core)?;
        self.manifest.push(name.to_string());
        Ok(())
    }

    /// Runs a stage and records its wall-clock time.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push((stage.to_string(), start.elapsed()));
        out
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("command: {}\n", self.command);
        for (k, v) in &self.info {
            s.push_str(&format!("{k}: {v}\n"));
        }
        for c in &self.checks {
            s.push_str(&format!("{}: {}\n", c.name, if c.pass { "pass" } else { "fail" }));
            for (k, v) in &c.details {
                s.push_str(&format!("{}.{k}: {}\n", c.name, csvio::format_real(*v)));
            }
            if let Some(src) = &c.source {
                s.push_str(&format!("{}.source: {src}\n", c.name));
            }
        }
        s.push_str(&format!("overall: {}\n", if self.passed() { "pass" } else { "fail" }));
        s.push_str(&format!("manifest: {}\n", self.manifest.join(",")));
        s
    }

    pub fn to_json(&self) -> Value {
        let number = |v: f64| {
            serde_json::Number::from_f64(v)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(csvio::format_real(v)))
        };
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                let details: Map<String, Value> =
                    c.details.iter().map(|(k, v)| (k.clone(), number(*v))).collect();
                json!({
                    "name": c.name,
                    "pass": c.pass,
                    "details": details,
                    "source": c.source,
                })
            })
            .collect();
        let info: Map<String, Value> =
            self.info.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        json!({
            "command": self.command,
            "info": info,
            "checks": checks,
            "overall": self.passed(),
            "manifest": self.manifest,
        })
    }

    /// Writes `summary.txt` and `summary.json`.
    pub fn write(&self) -> Result<(), CliError> {
        let txt = self.out_dir.join("summary.txt");
        csvio::write_text(&txt, &self.to_text()).map_err(CliError::from_core)?;
        let js = self.out_dir.join("summary.json");
        let mut body = serde_json::to_string_pretty(&self.to_json())
            .map_err(|e| CliError::Internal(e.to_string()))?;
        body.push('\n');
        csvio::write_text(&js, &body).map_err(CliError::from_core)
    }

    pub fn print(&self) {
        for c in &self.checks {
            println!("{:<24} {}", c.name, if c.pass { "PASS" } else { "FAIL" });
        }
        for (stage, d) in &self.timings {
            eprintln!("time {stage}: {:.3}s", d.as_secs_f64());
        }
        println!("output: {}", self.out_dir.display());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = RunSummary::new("verify", dir.path());
        s.info("cover", "quadratic_fan");
        s.check("axioms", true, &[("min_gap", 0.0)], Some("b_table.csv"));
        s.check("fan_bic", false, &[("failures", 3.0), ("worst", f64::INFINITY)], None);
        s.artifact("a.csv", |p| csvio::write_text(p, "x\n")).unwrap();
        assert_eq!(s.failing(), vec!["fan_bic"]);
        let text = s.to_text();
        assert!(text.contains("fan_bic: fail\n"));
        assert!(text.contains("axioms.source: b_table.csv\n"));
        assert!(text.contains("overall: fail\n"));
        assert!(text.ends_with("manifest: a.csv\n"));
        let js = s.to_json();
        assert_eq!(js["checks"][1]["details"]["worst"], "inf");
        assert_eq!(js["manifest"][0], "a.csv");
    }
}
