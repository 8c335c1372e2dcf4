//! The STRIPS + typing fragment of PDDL: parsing, printing, grounding and
//! simulation. Supported requirements are `:strips`, `:typing`,
//! `:negative-preconditions` and `:equality`; a `(:metric ...)` block in a
//! problem is accepted and ignored.

mod ast;
mod error;
mod parser;
mod printer;
mod sexpr;
mod sim;

pub use ast::*;
pub use error::{GroundError, Loc, PddlError, PddlErrorKind};
pub use parser::{parse_domain, parse_problem};
pub use printer::{print_domain, print_problem};
pub use sim::{
    applicable, apply, apply_in_place, first_unmet, first_unmet_goal, goal_satisfied, ground, initial_state,
    positional_binding,
};

#[cfg(test)]
mod tests;
