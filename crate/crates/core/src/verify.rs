//! Verification reports.

use serde::{Deserialize, Serialize};

const MAX_LISTED_FAILURES: usize = 25;

/// Outcome of one verifier: how many individual checks ran, and the first
/// counterexamples found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub passed: bool,
    pub seed: u64,
    pub checks: usize,
    pub failure_count: usize,
    pub failures: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(name: impl Into<String>, seed: u64) -> Self {
        Report {
            name: name.into(),
            passed: true,
            seed,
            checks: 0,
            failure_count: 0,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Records one check; `describe` is only called on failure.
    pub fn check<F: FnOnce() -> String>(&mut self, ok: bool, describe: F) -> bool {
        self.checks += 1;
        if !ok {
            self.fail(describe());
        }
        ok
    }

    pub fn fail(&mut self, failure: String) {
        self.passed = false;
        self.failure_count += 1;
        if self.failures.len() < MAX_LISTED_FAILURES {
            self.failures.push(failure);
        }
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Folds another report's checks into this one, prefixing its failures.
    pub fn absorb(&mut self, other: Report) {
        self.checks += other.checks;
        let unlisted = other.failure_count - other.failures.len();
        for f in other.failures {
            self.fail(format!("{}: {f}", other.name));
        }
        if unlisted > 0 {
            self.passed = false;
            self.failure_count += unlisted;
        }
        self.notes.extend(other.notes);
    }
}
