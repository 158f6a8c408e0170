//! Running every experiment and comparing runs.

use std::path::Path;

use serde_json::json;

use crate::config::ExperimentConfig;
use crate::experiments::{Command, Lab};
use crate::report::{stable_payload, Report};
use crate::CliError;

/// Reports of one `verify-all` run, in execution order.
pub struct Suite {
    pub reports: Vec<Report>,
}

impl Suite {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(Report::passed)
    }

    /// Reports contributing to criterion `k`.
    pub fn criterion(&self, k: u32) -> impl Iterator<Item = &Report> {
        self.reports.iter().filter(move |r| r.criteria.contains(&k))
    }

    pub fn exit_code(&self) -> i32 {
        self.reports.iter().map(Report::exit_code).max().unwrap_or(0)
    }

    pub fn summary(&self) -> serde_json::Value {
        let rows: Vec<_> = self
            .reports
            .iter()
            .map(|r| {
                json!({
                    "command": r.command,
                    "criteria": r.criteria,
                    "status": r.status,
                    "failed_checks": r.checks.iter().filter(|c| !c.passed).map(|c| c.id.clone()).collect::<Vec<_>>(),
                    "error": r.error,
                    "elapsed_s": r.timestamps.elapsed_s,
                })
            })
            .collect();
        let mut criteria = std::collections::BTreeMap::new();
        for r in &self.reports {
            for &k in &r.criteria {
                let e = criteria.entry(k.to_string()).or_insert(true);
                *e &= r.passed();
            }
        }
        json!({ "passed": self.passed(), "criteria": criteria, "reports": rows })
    }

    /// Writes `<out>/<command>/report.json`, artifacts and `<out>/summary.json`.
    pub fn write(&self, out: &Path) -> Result<(), CliError> {
        for r in &self.reports {
            r.write(&out.join(&r.command))?;
        }
        let s = serde_json::to_string_pretty(&self.summary()).map_err(|e| CliError::Report(e.to_string()))?;
        std::fs::write(out.join("summary.json"), s + "\n")?;
        Ok(())
    }
}

pub fn verify_all(cfg: &ExperimentConfig) -> Suite {
    let mut lab = Lab::new(cfg.clone());
    let reports = Command::ALL.iter().map(|&c| lab.run(c)).collect();
    Suite { reports }
}

/// Paths of files whose content differs between two output directories,
/// ignoring volatile report keys.
pub fn compare_dirs(a: &Path, b: &Path) -> Result<Vec<String>, CliError> {
    let mut diffs = Vec::new();
    let mut names = Vec::new();
    collect(a, a, &mut names)?;
    let mut other = Vec::new();
    collect(b, b, &mut other)?;
    for n in other.iter().filter(|n| !names.contains(n)) {
        diffs.push(n.clone());
    }
    for n in &names {
        let (pa, pb) = (a.join(n), b.join(n));
        if !pb.exists() {
            diffs.push(n.clone());
            continue;
        }
        let same = if n.ends_with("report.json") {
            stable_payload(&std::fs::read_to_string(&pa)?)? == stable_payload(&std::fs::read_to_string(&pb)?)?
        } else if n == "summary.json" {
            strip_elapsed(&std::fs::read_to_string(&pa)?)? == strip_elapsed(&std::fs::read_to_string(&pb)?)?
        } else {
            std::fs::read(&pa)? == std::fs::read(&pb)?
        };
        if !same {
            diffs.push(n.clone());
        }
    }
    diffs.sort();
    Ok(diffs)
}

fn strip_elapsed(s: &str) -> Result<serde_json::Value, CliError> {
    let mut v: serde_json::Value = serde_json::from_str(s).map_err(|e| CliError::Report(e.to_string()))?;
    if let Some(rows) = v.get_mut("reports").and_then(|r| r.as_array_mut()) {
        for r in rows {
            if let Some(o) = r.as_object_mut() {
                o.remove("elapsed_s");
            }
        }
    }
    Ok(v)
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<(), CliError> {
    for e in std::fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_dir() {
            collect(root, &p, out)?;
        } else if let Ok(rel) = p.strip_prefix(root) {
            out.push(rel.to_string_lossy().into_owned());
        }
    }
    Ok(())
}
