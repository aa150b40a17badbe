use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Structured description of a failed check: which stage, which named
/// clause, and the vertices or values that witness the failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub clause: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<usize>,
}

impl Failure {
    pub fn new(stage: &str, clause: &str, detail: impl Into<String>) -> Self {
        Failure {
            stage: stage.to_string(),
            clause: clause.to_string(),
            detail: detail.into(),
            witness: Vec::new(),
        }
    }

    pub fn with_witness(mut self, witness: Vec<usize>) -> Self {
        self.witness = witness;
        self
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", self.stage, self.clause, self.detail)?;
        if !self.witness.is_empty() {
            write!(f, " (witness {:?})", self.witness)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    /// Malformed input: out-of-range vertex, bad JSON, inconsistent sizes.
    #[error("input error: {0}")]
    Input(String),
    /// A caller broke an operation contract (for example summing overlapping graphs).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A named precondition of a construction step or pipeline does not hold.
    #[error("precondition failed: {0}")]
    Precondition(Box<Failure>),
    /// A construction step could not be completed on this input.
    #[error("infeasible: {0}")]
    Infeasible(Box<Failure>),
}

impl Error {
    pub fn precondition(stage: &str, clause: &str, detail: impl Into<String>) -> Self {
        Error::Precondition(Box::new(Failure::new(stage, clause, detail)))
    }

    pub fn infeasible(stage: &str, clause: &str, detail: impl Into<String>) -> Self {
        Error::Infeasible(Box::new(Failure::new(stage, clause, detail)))
    }

    pub fn failure(&self) -> Option<&Failure> {
        match self {
            Error::Precondition(f) | Error::Infeasible(f) => Some(f),
            _ => None,
        }
    }

    /// Attach witness vertices to a precondition or infeasibility error.
    pub fn with_witness(self, witness: Vec<usize>) -> Self {
        match self {
            Error::Precondition(f) => Error::Precondition(Box::new(f.with_witness(witness))),
            Error::Infeasible(f) => Error::Infeasible(Box::new(f.with_witness(witness))),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
