use serde::{Deserialize, Serialize};

/// Why a plan was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureReason {
    UnknownAction {
        name: String,
    },
    BadArity {
        action: String,
        expected: usize,
        found: usize,
    },
    UnknownObject {
        object: String,
    },
    TypeMismatch {
        object: String,
        expected: String,
    },
    /// `negated` is true when the atom is forbidden by a negative precondition
    /// but holds; false when a required atom is missing.
    PreconditionViolated {
        atom: String,
        negated: bool,
    },
    GoalNotSatisfied {
        literal: String,
        negated: bool,
    },
}

/// Outcome of validating one plan against one task.
///
/// For `GoalNotSatisfied`, `failure_step` equals the plan length: every step
/// executed and the final state misses the goal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Valid { plan_length: usize },
    Invalid { failure_step: usize, reason: FailureReason },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid { .. })
    }

    pub fn plan_length(&self) -> Option<usize> {
        match self {
            Verdict::Valid { plan_length } => Some(*plan_length),
            Verdict::Invalid { .. } => None,
        }
    }

    pub fn failure_step(&self) -> Option<usize> {
        match self {
            Verdict::Invalid { failure_step, .. } => Some(*failure_step),
            Verdict::Valid { .. } => None,
        }
    }
}
