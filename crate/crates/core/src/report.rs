//! Pass/fail records for the randomized identity checks.

use std::fmt::Write;

use serde_json::{json, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub identity: String,
    pub cases: usize,
    /// The first failing case, if any.
    pub witness: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn record(&mut self, identity: impl Into<String>, cases: usize, witness: Option<String>) {
        self.checks.push(Check {
            identity: identity.into(),
            cases,
            witness,
        });
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn to_json(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                json!({
                    "identity": c.identity,
                    "cases": c.cases,
                    "passed": c.passed(),
                    "witness": c.witness,
                })
            })
            .collect();
        json!({ "passed": self.passed(), "checks": checks })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            match &c.witness {
                None => writeln!(out, "PASS  {} ({} cases)", c.identity, c.cases),
                Some(w) => writeln!(out, "FAIL  {} ({} cases): {w}", c.identity, c.cases),
            }
            .expect("writing to a String");
        }
        let failed = self.failures().count();
        writeln!(out, "{} checks, {failed} failed", self.checks.len()).expect("writing to a String");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_and_fail_lines() {
        let mut r = Report::new();
        r.record("a", 3, None);
        assert!(r.passed());
        r.record("b", 1, Some("at (1)".into()));
        assert!(!r.passed());
        let text = r.to_text();
        assert!(text.contains("PASS  a (3 cases)"));
        assert!(text.contains("FAIL  b (1 cases): at (1)"));
        assert_eq!(r.to_json()["checks"][1]["witness"], "at (1)");
    }
}
