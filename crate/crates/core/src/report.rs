//! Clause-by-clause verification reports.

use serde::{Deserialize, Serialize};

use crate::error::Failure;

/// Outcome of one named clause.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub clause: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<usize>,
    /// Distance from the bound in the clause's natural unit; negative on failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    /// Advisory checks are recorded but do not make the report fail.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub advisory: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub subject: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(subject: impl Into<String>) -> Self {
        Report {
            subject: subject.into(),
            checks: Vec::new(),
        }
    }

    pub fn check(&mut self, clause: &str, pass: bool, detail: impl Into<String>) -> &mut Check {
        self.checks.push(Check {
            clause: clause.to_string(),
            pass,
            detail: detail.into(),
            witness: Vec::new(),
            slack: None,
            advisory: false,
        });
        self.checks.last_mut().unwrap()
    }

    /// A clause that is reported but never fails the report.
    pub fn advise(&mut self, clause: &str, pass: bool, detail: impl Into<String>) -> &mut Check {
        let c = self.check(clause, pass, detail);
        c.advisory = true;
        c
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass || c.advisory)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass && !c.advisory)
    }

    pub fn get(&self, clause: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.clause == clause)
    }

    /// Append the checks of `other`, prefixing their clause names.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            c.clause = format!("{prefix}{}", c.clause);
            self.checks.push(c);
        }
    }

    /// The first hard failure as a structured [`Failure`].
    pub fn to_failure(&self, stage: &str) -> Option<Failure> {
        self.first_failure().map(|c| {
            Failure::new(stage, &c.clause, format!("{}: {}", self.subject, c.detail))
                .with_witness(c.witness.clone())
        })
    }
}

impl Check {
    pub fn witness(&mut self, w: Vec<usize>) -> &mut Self {
        self.witness = w;
        self
    }

    pub fn slack(&mut self, s: f64) -> &mut Self {
        self.slack = Some(s);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advisory_checks_do_not_fail() {
        let mut r = Report::new("x");
        r.check("a", true, "");
        r.advise("b", false, "soft");
        assert!(r.passed());
        r.check("c", false, "hard").witness(vec![3]);
        assert!(!r.passed());
        let f = r.to_failure("stage").unwrap();
        assert_eq!(f.clause, "c");
        assert_eq!(f.witness, vec![3]);
    }
}
