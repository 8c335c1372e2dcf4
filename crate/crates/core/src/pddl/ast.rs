use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub const OBJECT: &str = "object";
pub const EQUALITY: &str = "=";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Requirement {
    Strips,
    Typing,
    NegativePreconditions,
    Equality,
}

impl Requirement {
    pub fn from_keyword(kw: &str) -> Option<Self> {
        match kw {
            ":strips" => Some(Self::Strips),
            ":typing" => Some(Self::Typing),
            ":negative-preconditions" => Some(Self::NegativePreconditions),
            ":equality" => Some(Self::Equality),
            _ => None,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Self::Strips => ":strips",
            Self::Typing => ":typing",
            Self::NegativePreconditions => ":negative-preconditions",
            Self::Equality => ":equality",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// Variable name without the leading `?`.
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => f.write_str(c),
        }
    }
}

/// Lifted atom appearing in an action schema.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: Into<String>>(predicate: &str, args: impl IntoIterator<Item = S>) -> Self {
        Self {
            predicate: predicate.to_ascii_lowercase(),
            args: args.into_iter().map(|a| a.into().to_ascii_lowercase()).collect(),
        }
    }

    pub fn is_equality(&self) -> bool {
        self.predicate == EQUALITY
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub precond_pos: BTreeSet<Atom>,
    pub precond_neg: BTreeSet<Atom>,
    pub add: BTreeSet<Atom>,
    pub del: BTreeSet<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainAst {
    pub name: String,
    pub requirements: BTreeSet<Requirement>,
    /// Type name to parent; the root `object` is implicit and not stored.
    pub types: BTreeMap<String, String>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub schemas: Vec<ActionSchema>,
}

impl DomainAst {
    pub fn has_type(&self, ty: &str) -> bool {
        ty == OBJECT || self.types.contains_key(ty)
    }

    /// Whether `ty` equals `ancestor` or descends from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut cur = ty;
        // hierarchy is acyclic after parsing; the bound guards hand-built ASTs
        for _ in 0..=self.types.len() + 1 {
            if cur == ancestor {
                return true;
            }
            match self.types.get(cur) {
                Some(parent) => cur = parent,
                None => return ancestor == OBJECT,
            }
        }
        false
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn schema(&self, name: &str) -> Option<&ActionSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    pub fn constant_type(&self, name: &str) -> Option<&str> {
        self.constants.iter().find(|c| c.name == name).map(|c| c.ty.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemAst {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: BTreeSet<GroundAtom>,
    pub goal_pos: BTreeSet<GroundAtom>,
    pub goal_neg: BTreeSet<GroundAtom>,
}

impl ProblemAst {
    /// Type of a problem object or, failing that, a domain constant.
    pub fn object_type<'a>(&'a self, domain: &'a DomainAst, name: &str) -> Option<&'a str> {
        self.objects.iter().find(|o| o.name == name).map(|o| o.ty.as_str()).or_else(|| domain.constant_type(name))
    }

    pub fn objects_of_type<'a>(&'a self, domain: &'a DomainAst, ty: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.objects
            .iter()
            .chain(domain.constants.iter())
            .filter(move |o| domain.is_subtype(&o.ty, ty))
            .map(|o| o.name.as_str())
    }
}

/// Closed-world state: atoms absent from the set are false.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct State {
    pub atoms: BTreeSet<GroundAtom>,
}

impl State {
    pub fn new(atoms: BTreeSet<GroundAtom>) -> Self {
        Self { atoms }
    }

    /// Truth of an atom; equality atoms are evaluated on their arguments.
    pub fn holds(&self, atom: &GroundAtom) -> bool {
        if atom.is_equality() {
            atom.args.len() == 2 && atom.args[0] == atom.args[1]
        } else {
            self.atoms.contains(atom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub schema: String,
    pub args: Vec<String>,
    pub precond_pos: BTreeSet<GroundAtom>,
    pub precond_neg: BTreeSet<GroundAtom>,
    pub add: BTreeSet<GroundAtom>,
    pub del: BTreeSet<GroundAtom>,
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.schema)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}
