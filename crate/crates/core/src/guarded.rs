//! Cutoffs for guarded protocols (disjunctive and conjunctive guards).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GuardKind {
    Disjunctive,
    Conjunctive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    /// A property over `k` of the B-processes.
    Property,
    Deadlock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fairness {
    None,
    Unconditional,
    Strong,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardedQuery {
    pub kind: GuardKind,
    /// Number of states of template B.
    pub template_size: usize,
    /// Indexed processes the property talks about; unused for deadlock detection.
    pub k: Option<usize>,
    pub target: Target,
    pub fairness: Fairness,
    /// Every conjunctive guard excludes at most one state.
    pub one_conjunctive: bool,
    /// Non-deadlocked processes return to their initial state infinitely often.
    pub initializing_runs: bool,
}

impl GuardedQuery {
    pub fn property(kind: GuardKind, template_size: usize, k: usize, fairness: Fairness) -> GuardedQuery {
        GuardedQuery {
            kind,
            template_size,
            k: Some(k),
            target: Target::Property,
            fairness,
            one_conjunctive: false,
            initializing_runs: false,
        }
    }

    pub fn deadlock(kind: GuardKind, template_size: usize, fairness: Fairness) -> GuardedQuery {
        GuardedQuery {
            kind,
            template_size,
            k: None,
            target: Target::Deadlock,
            fairness,
            one_conjunctive: false,
            initializing_runs: false,
        }
    }

    pub fn with_restrictions(mut self) -> GuardedQuery {
        self.one_conjunctive = true;
        self.initializing_runs = true;
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GuardedError {
    #[error("restriction violated: {0}")]
    RestrictionViolated(String),
    #[error("no cutoff for this configuration: {0}")]
    Unsupported(String),
    #[error("invalid query: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cutoff {
    pub value: usize,
    pub tight: bool,
    pub notes: Vec<String>,
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)?;
        for n in &self.notes {
            write!(f, " ({n})")?;
        }
        Ok(())
    }
}

const INIT_NOTE: &str = "requires initializing runs";
const ONE_CONJ_NOTE: &str = "requires 1-conjunctive guards";

pub fn guarded_cutoff(q: &GuardedQuery) -> Result<Cutoff, GuardedError> {
    use Fairness as F;
    use GuardKind::*;
    let b = q.template_size;
    if b == 0 {
        return Err(GuardedError::Invalid("template size must be at least 1".into()));
    }
    let k = match (q.target, q.k) {
        (Target::Property, Some(k)) if k >= 1 => k,
        (Target::Property, _) => return Err(GuardedError::Invalid("properties need k >= 1".into())),
        (Target::Deadlock, _) => 0,
    };
    let mut notes = Vec::new();
    let need = |ok: bool, what: &str, notes: &mut Vec<String>| -> Result<(), GuardedError> {
        if !ok {
            return Err(GuardedError::RestrictionViolated(what.into()));
        }
        notes.push(what.to_string());
        Ok(())
    };
    let (value, tight) = match (q.kind, q.target, q.fairness) {
        (Disjunctive, Target::Property, F::None) => (b + k + 1, true),
        (Disjunctive, Target::Property, F::Unconditional) => (2 * b + k - 1, true),
        (Disjunctive, Target::Deadlock, F::None) => {
            notes.push("asymptotically tight, possibly not tight".into());
            (2 * b - 1, false)
        }
        (Disjunctive, Target::Deadlock, F::Strong) => (2 * b - 1, true),
        (Conjunctive, Target::Property, F::None) => (k + 1, true),
        (Conjunctive, Target::Property, F::Unconditional) => {
            need(q.initializing_runs, INIT_NOTE, &mut notes)?;
            (k + 1, true)
        }
        (Conjunctive, Target::Deadlock, f @ (F::None | F::Strong)) => {
            need(q.one_conjunctive, ONE_CONJ_NOTE, &mut notes)?;
            if f == F::Strong {
                need(q.initializing_runs, INIT_NOTE, &mut notes)?;
            }
            // a single-state template gives 0; one process is the least meaningful system
            ((2 * b).saturating_sub(2).max(1), true)
        }
        (kind, target, fairness) => {
            return Err(GuardedError::Unsupported(format!("{kind:?} guards, {target:?}, {fairness:?} fairness")))
        }
    };
    Ok(Cutoff { value, tight, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_examples() {
        let c = |q: GuardedQuery| guarded_cutoff(&q).unwrap().value;
        assert_eq!(c(GuardedQuery::property(GuardKind::Disjunctive, 3, 1, Fairness::None)), 5);
        assert_eq!(c(GuardedQuery::property(GuardKind::Conjunctive, 7, 1, Fairness::None)), 2);
        assert_eq!(c(GuardedQuery::deadlock(GuardKind::Disjunctive, 4, Fairness::Strong)), 7);
        assert_eq!(c(GuardedQuery::property(GuardKind::Disjunctive, 2, 3, Fairness::Unconditional)), 6);
        assert_eq!(c(GuardedQuery::deadlock(GuardKind::Conjunctive, 5, Fairness::None).with_restrictions()), 8);
    }

    #[test]
    fn restrictions() {
        let q = GuardedQuery::deadlock(GuardKind::Conjunctive, 3, Fairness::None);
        assert!(matches!(guarded_cutoff(&q), Err(GuardedError::RestrictionViolated(_))));
        let q = GuardedQuery::property(GuardKind::Conjunctive, 3, 2, Fairness::Unconditional);
        assert!(matches!(guarded_cutoff(&q), Err(GuardedError::RestrictionViolated(_))));
        let mut q = GuardedQuery::deadlock(GuardKind::Conjunctive, 3, Fairness::Strong);
        q.one_conjunctive = true;
        assert!(matches!(guarded_cutoff(&q), Err(GuardedError::RestrictionViolated(_))));
        q.initializing_runs = true;
        let c = guarded_cutoff(&q).unwrap();
        assert_eq!(c.notes.len(), 2);
    }

    #[test]
    fn uncovered_and_invalid() {
        let q = GuardedQuery::property(GuardKind::Disjunctive, 3, 1, Fairness::Strong);
        assert!(matches!(guarded_cutoff(&q), Err(GuardedError::Unsupported(_))));
        let q = GuardedQuery::deadlock(GuardKind::Disjunctive, 3, Fairness::Unconditional);
        assert!(matches!(guarded_cutoff(&q), Err(GuardedError::Unsupported(_))));
        let q = GuardedQuery::property(GuardKind::Disjunctive, 0, 1, Fairness::None);
        assert!(matches!(guarded_cutoff(&q), Err(GuardedError::Invalid(_))));
        let q = GuardedQuery::property(GuardKind::Disjunctive, 2, 0, Fairness::None);
        assert!(matches!(guarded_cutoff(&q), Err(GuardedError::Invalid(_))));
    }

    #[test]
    fn disjunctive_deadlock_is_not_tight() {
        let c = guarded_cutoff(&GuardedQuery::deadlock(GuardKind::Disjunctive, 2, Fairness::None)).unwrap();
        assert!(!c.tight);
        assert_eq!(c.to_string(), "3 (asymptotically tight, possibly not tight)");
    }
}
