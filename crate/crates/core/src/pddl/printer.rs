//! Canonical PDDL rendering. Output reparses to a structurally equal AST.

use std::fmt::Write;

use super::ast::*;

fn typed_list(items: &[TypedName], vars: bool) -> String {
    let mut out = String::new();
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if vars {
            out.push('?');
        }
        out.push_str(&t.name);
        if t.ty != OBJECT {
            let _ = write!(out, " - {}", t.ty);
        }
    }
    out
}

fn conjunction<'a, T: std::fmt::Display + 'a>(
    pos: impl IntoIterator<Item = &'a T>,
    neg: impl IntoIterator<Item = &'a T>,
) -> String {
    let mut parts: Vec<String> = pos.into_iter().map(ToString::to_string).collect();
    parts.extend(neg.into_iter().map(|a| format!("(not {a})")));
    if parts.is_empty() {
        "(and)".to_string()
    } else {
        format!("(and {})", parts.join(" "))
    }
}

pub fn print_domain(d: &DomainAst) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    if !d.requirements.is_empty() {
        let reqs: Vec<&str> = d.requirements.iter().map(|r| r.keyword()).collect();
        let _ = writeln!(out, "  (:requirements {})", reqs.join(" "));
    }
    if !d.types.is_empty() {
        let types: Vec<String> = d.types.iter().map(|(t, p)| format!("{t} - {p}")).collect();
        let _ = writeln!(out, "  (:types {})", types.join(" "));
    }
    if !d.constants.is_empty() {
        let _ = writeln!(out, "  (:constants {})", typed_list(&d.constants, false));
    }
    out.push_str("  (:predicates");
    for p in &d.predicates {
        if p.params.is_empty() {
            let _ = write!(out, "\n    ({})", p.name);
        } else {
            let _ = write!(out, "\n    ({} {})", p.name, typed_list(&p.params, true));
        }
    }
    out.push_str(")\n");
    for s in &d.schemas {
        let _ = writeln!(out, "  (:action {}", s.name);
        let _ = writeln!(out, "    :parameters ({})", typed_list(&s.params, true));
        let _ = writeln!(out, "    :precondition {}", conjunction(&s.precond_pos, &s.precond_neg));
        let _ = writeln!(out, "    :effect {})", conjunction(&s.add, &s.del));
    }
    out.push_str(")\n");
    out
}

pub fn print_problem(p: &ProblemAst) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", p.name);
    let _ = writeln!(out, "  (:domain {})", p.domain_name);
    let _ = writeln!(out, "  (:objects {})", typed_list(&p.objects, false));
    out.push_str("  (:init");
    for a in &p.init {
        let _ = write!(out, "\n    {a}");
    }
    out.push_str(")\n");
    let _ = writeln!(out, "  (:goal {}))", conjunction(&p.goal_pos, &p.goal_neg));
    out
}
