//! Grounding and STRIPS state transitions.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::error::GroundError;

fn subst(atom: &Atom, binding: &BTreeMap<String, String>) -> Result<GroundAtom, GroundError> {
    let mut args = Vec::with_capacity(atom.args.len());
    for t in &atom.args {
        match t {
            Term::Const(c) => args.push(c.clone()),
            Term::Var(v) => match binding.get(v) {
                Some(obj) => args.push(obj.clone()),
                None => return Err(GroundError::IncompleteBinding(v.clone())),
            },
        }
    }
    Ok(GroundAtom { predicate: atom.predicate.clone(), args })
}

fn subst_all(atoms: &BTreeSet<Atom>, binding: &BTreeMap<String, String>) -> Result<BTreeSet<GroundAtom>, GroundError> {
    atoms.iter().map(|a| subst(a, binding)).collect()
}

/// Instantiates `schema` under a total, type-correct binding of its parameters.
pub fn ground(
    domain: &DomainAst,
    schema: &ActionSchema,
    binding: &BTreeMap<String, String>,
    problem: &ProblemAst,
) -> Result<GroundAction, GroundError> {
    let mut args = Vec::with_capacity(schema.params.len());
    for p in &schema.params {
        let Some(obj) = binding.get(&p.name) else {
            return Err(GroundError::IncompleteBinding(p.name.clone()));
        };
        let Some(actual) = problem.object_type(domain, obj) else {
            return Err(GroundError::UnknownObject(obj.clone()));
        };
        if !domain.is_subtype(actual, &p.ty) {
            return Err(GroundError::TypeViolation { object: obj.clone(), expected: p.ty.clone() });
        }
        args.push(obj.clone());
    }
    Ok(GroundAction {
        schema: schema.name.clone(),
        args,
        precond_pos: subst_all(&schema.precond_pos, binding)?,
        precond_neg: subst_all(&schema.precond_neg, binding)?,
        add: subst_all(&schema.add, binding)?,
        del: subst_all(&schema.del, binding)?,
    })
}

/// Binds a schema's parameters positionally to `args`.
pub fn positional_binding(schema: &ActionSchema, args: &[String]) -> BTreeMap<String, String> {
    schema.params.iter().map(|p| p.name.clone()).zip(args.iter().cloned()).collect()
}

/// First unmet precondition in canonical order: positive literals before
/// negative ones, each in sorted atom order. `None` means applicable.
pub fn first_unmet<'a>(state: &State, action: &'a GroundAction) -> Option<(&'a GroundAtom, bool)> {
    if let Some(a) = action.precond_pos.iter().find(|a| !state.holds(a)) {
        return Some((a, false));
    }
    action.precond_neg.iter().find(|a| state.holds(a)).map(|a| (a, true))
}

pub fn applicable(state: &State, action: &GroundAction) -> bool {
    first_unmet(state, action).is_none()
}

/// Delete-then-add successor; the state is updated in place.
pub fn apply_in_place(state: &mut State, action: &GroundAction) -> Result<(), GroundError> {
    if let Some((atom, negated)) = first_unmet(state, action) {
        let lit = if negated { format!("(not {atom})") } else { atom.to_string() };
        return Err(GroundError::PreconditionViolated(lit));
    }
    for a in &action.del {
        state.atoms.remove(a);
    }
    for a in &action.add {
        state.atoms.insert(a.clone());
    }
    Ok(())
}

pub fn apply(state: &State, action: &GroundAction) -> Result<State, GroundError> {
    let mut next = state.clone();
    apply_in_place(&mut next, action)?;
    Ok(next)
}

/// First unmet goal literal, `(atom, negated)`, or `None` when satisfied.
pub fn first_unmet_goal<'a>(state: &State, problem: &'a ProblemAst) -> Option<(&'a GroundAtom, bool)> {
    if let Some(a) = problem.goal_pos.iter().find(|a| !state.holds(a)) {
        return Some((a, false));
    }
    problem.goal_neg.iter().find(|a| state.holds(a)).map(|a| (a, true))
}

pub fn goal_satisfied(state: &State, problem: &ProblemAst) -> bool {
    first_unmet_goal(state, problem).is_none()
}

pub fn initial_state(problem: &ProblemAst) -> State {
    State::new(problem.init.clone())
}
