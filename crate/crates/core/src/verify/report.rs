use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ph::PropertyOutcome;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One named check. `worst` is the largest violation measure seen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub sample: Option<Vec<f64>>,
    pub note: String,
}

impl Check {
    pub fn fail(name: &str, worst: f64, sample: Option<Vec<f64>>, note: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: false,
            worst,
            sample,
            note: note.to_string(),
        }
    }

    pub fn at_most(name: &str, value: f64, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: value <= tol,
            worst: value,
            sample: None,
            note: format!("tolerance {tol:e}"),
        }
    }

    pub(crate) fn from_outcome(name: &str, o: &PropertyOutcome) -> Self {
        Self {
            name: name.to_string(),
            passed: o.passed(),
            worst: o.worst,
            sample: o.first_violation.as_ref().map(|v| v.sample.clone()),
            note: "relative defect".into(),
        }
    }

    pub(crate) fn psd(name: &str, o: &PropertyOutcome) -> Self {
        Self {
            note: "smallest eigenvalue".into(),
            ..Self::from_outcome(name, o)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub audit: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl AuditReport {
    pub fn new(audit: &str, seed: u64) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            audit: audit.to_string(),
            seed,
            checks: Vec::new(),
            passed: false,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn finish(mut self) -> Self {
        self.passed = !self.checks.is_empty() && self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "audit: {} (seed {})", self.audit, self.seed);
        for c in &self.checks {
            let _ = write!(out, "  [{}] {}: worst {:e}", if c.passed { "pass" } else { "FAIL" }, c.name, c.worst);
            if !c.note.is_empty() {
                let _ = write!(out, " ({})", c.note);
            }
            if let Some(s) = &c.sample {
                let _ = write!(out, " at {s:?}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "summary: {}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}
