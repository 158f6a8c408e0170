//! Self-describing JSON reports and the files written next to them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Top-level keys whose values vary between identical runs.
pub const VOLATILE_KEYS: [&str; 1] = ["timestamps"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    Error,
}

/// One quantified check. `value` is compared against `bound` in the sense
/// given by `relation`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: String,
    pub criterion: u32,
    pub statement: String,
    pub relation: &'static str,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl Check {
    pub fn at_most(criterion: u32, id: &str, statement: &str, value: f64, bound: f64) -> Self {
        Check::new(criterion, id, statement, "<=", value, bound, value <= bound)
    }

    pub fn below(criterion: u32, id: &str, statement: &str, value: f64, bound: f64) -> Self {
        Check::new(criterion, id, statement, "<", value, bound, value < bound)
    }

    pub fn at_least(criterion: u32, id: &str, statement: &str, value: f64, bound: f64) -> Self {
        Check::new(criterion, id, statement, ">=", value, bound, value >= bound)
    }

    pub fn above(criterion: u32, id: &str, statement: &str, value: f64, bound: f64) -> Self {
        Check::new(criterion, id, statement, ">", value, bound, value > bound)
    }

    pub fn holds(criterion: u32, id: &str, statement: &str, ok: bool) -> Self {
        Check::new(criterion, id, statement, "==", ok as u8 as f64, 1.0, ok)
    }

    fn new(criterion: u32, id: &str, statement: &str, relation: &'static str, value: f64, bound: f64, passed: bool) -> Self {
        Check { id: id.into(), criterion, statement: statement.into(), relation, value, bound, passed, witness: None }
    }

    pub fn with_witness(mut self, w: Value) -> Self {
        if !self.passed {
            self.witness = Some(w);
        }
        self
    }
}

/// A file written next to `report.json`.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub criteria: Vec<u32>,
    pub config_hash: String,
    pub status: Status,
    pub checks: Vec<Check>,
    pub data: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub artifacts: Vec<String>,
    pub timestamps: Timestamps,
    #[serde(skip)]
    pub files: Vec<Artifact>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timestamps {
    pub generated_at_unix: u64,
    pub elapsed_s: f64,
}

impl Report {
    pub fn new(command: &str, criteria: &[u32], config_hash: &str) -> Self {
        Report {
            command: command.into(),
            criteria: criteria.to_vec(),
            config_hash: config_hash.into(),
            status: Status::Passed,
            checks: Vec::new(),
            data: BTreeMap::new(),
            error: None,
            artifacts: Vec::new(),
            timestamps: Timestamps::default(),
            files: Vec::new(),
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn put<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).unwrap_or_else(|e| Value::String(format!("unserializable: {e}")));
        self.data.insert(key.into(), v);
    }

    pub fn attach(&mut self, name: &str, bytes: Vec<u8>) {
        self.artifacts.push(name.into());
        self.files.push(Artifact { name: name.into(), bytes });
    }

    pub fn fail_with(&mut self, err: &hyperdyn::Error) {
        self.error = Some(err.to_string());
        self.status = Status::Error;
    }

    /// Sets the status from the checks unless an error was recorded.
    pub fn finish(&mut self, elapsed_s: f64) {
        if self.status != Status::Error {
            self.status = if self.checks.iter().all(|c| c.passed) { Status::Passed } else { Status::Failed };
        }
        self.timestamps = Timestamps {
            generated_at_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            elapsed_s,
        };
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Passed
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Writes `report.json` and the artifacts into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        for a in &self.files {
            std::fs::write(dir.join(&a.name), &a.bytes)?;
        }
        Ok(())
    }

    /// Process exit code: 0 passed, 2 failed checks, 1 error.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Passed => 0,
            Status::Failed => 2,
            Status::Error => 1,
        }
    }
}

/// The report with its volatile keys removed, for run-to-run comparison.
pub fn stable_payload(json: &str) -> Result<Value, CliError> {
    let mut v: Value = serde_json::from_str(json).map_err(|e| CliError::Report(e.to_string()))?;
    if let Some(o) = v.as_object_mut() {
        for k in VOLATILE_KEYS {
            o.remove(k);
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_checks() {
        let mut r = Report::new("x", &[1], "h");
        r.check(Check::at_most(1, "a", "s", 1.0, 2.0));
        r.finish(0.0);
        assert_eq!(r.exit_code(), 0);
        r.check(Check::at_most(1, "b", "s", f64::NAN, 2.0));
        r.finish(0.0);
        assert_eq!(r.exit_code(), 2);
        r.fail_with(&hyperdyn::Error::EmptyChain);
        r.finish(0.0);
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn volatile_keys_are_dropped() {
        let mut r = Report::new("x", &[1], "h");
        r.finish(1.5);
        let a = stable_payload(&r.to_json()).unwrap();
        r.finish(2.5);
        assert_eq!(a, stable_payload(&r.to_json()).unwrap());
    }
}
