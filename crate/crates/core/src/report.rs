//! Pass/fail reports produced by the sampled axiom checkers.

use serde::Serialize;

/// Concrete values exhibiting a violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness<T> {
    pub values: Vec<T>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomOutcome<T> {
    pub axiom: &'static str,
    pub checks: usize,
    pub violations: usize,
    /// First violation encountered, if any.
    pub witness: Option<Witness<T>>,
}

impl<T> AxiomOutcome<T> {
    pub(crate) fn new(axiom: &'static str) -> Self {
        Self {
            axiom,
            checks: 0,
            violations: 0,
            witness: None,
        }
    }

    pub(crate) fn record(&mut self, ok: bool, witness: impl FnOnce() -> Witness<T>) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport<T> {
    pub outcomes: Vec<AxiomOutcome<T>>,
}

impl<T> AxiomReport<T> {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(AxiomOutcome::passed)
    }

    pub fn outcome(&self, axiom: &str) -> Option<&AxiomOutcome<T>> {
        self.outcomes.iter().find(|o| o.axiom == axiom)
    }

    pub fn total_violations(&self) -> usize {
        self.outcomes.iter().map(|o| o.violations).sum()
    }
}
