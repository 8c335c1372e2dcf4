use std::fmt;

use thiserror::Error;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Loc {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlErrorKind {
    #[error("unexpected character {0:?}")]
    Lexical(char),
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown requirement {0}")]
    UnknownRequirement(String),
    #[error("unsupported construct {0}")]
    Unsupported(String),
    #[error("undeclared type {0}")]
    UndeclaredType(String),
    #[error("undeclared predicate {0}")]
    UndeclaredPredicate(String),
    #[error("undeclared variable ?{0}")]
    UndeclaredVariable(String),
    #[error("undeclared object {0}")]
    UndeclaredObject(String),
    #[error("predicate {predicate} expects {expected} arguments, found {found}")]
    ArityMismatch { predicate: String, expected: usize, found: usize },
    #[error("duplicate {what} {name}")]
    Duplicate { what: &'static str, name: String },
    #[error("object {object} of type {actual} is not a {expected}")]
    TypeMismatch { object: String, actual: String, expected: String },
    #[error("cyclic type hierarchy at {0}")]
    CyclicType(String),
    #[error("atom {0} is both required and forbidden")]
    ContradictoryPrecondition(String),
    #[error("problem refers to domain {found}, expected {expected}")]
    DomainMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{loc}: {kind}")]
pub struct PddlError {
    pub kind: PddlErrorKind,
    pub loc: Loc,
}

impl PddlError {
    pub fn new(kind: PddlErrorKind, loc: Loc) -> Self {
        Self { kind, loc }
    }
}

/// Errors raised when instantiating or executing ground actions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("variable ?{0} has no binding")]
    IncompleteBinding(String),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("object {object} is not of type {expected}")]
    TypeViolation { object: String, expected: String },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}
