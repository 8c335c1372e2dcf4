//! Interpretation of s-expressions as PDDL domains and problems, with
//! semantic checks (declared names, arities, types).

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::error::{Loc, PddlError, PddlErrorKind};
use super::sexpr::{read_one, SExpr};

type Result<T> = std::result::Result<T, PddlError>;

fn err<T>(kind: PddlErrorKind, loc: Loc) -> Result<T> {
    Err(PddlError::new(kind, loc))
}

fn syntax<T>(msg: impl Into<String>, loc: Loc) -> Result<T> {
    err(PddlErrorKind::Syntax(msg.into()), loc)
}

fn expect_list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr]> {
    e.as_list().map_or_else(|| syntax(format!("expected list for {what}"), e.loc()), Ok)
}

fn expect_atom<'a>(e: &'a SExpr, what: &str) -> Result<&'a str> {
    e.as_atom().map_or_else(|| syntax(format!("expected {what}"), e.loc()), Ok)
}

fn expect_name<'a>(e: &'a SExpr, what: &str) -> Result<&'a str> {
    let s = expect_atom(e, what)?;
    if s.starts_with(':') || s.starts_with('?') || s == "-" {
        return syntax(format!("expected {what}, found {s}"), e.loc());
    }
    Ok(s)
}

/// Parses the `(define (<kind> NAME) ...)` wrapper and returns (name, sections).
fn parse_header<'a>(root: &'a SExpr, kind: &str) -> Result<(&'a str, &'a [SExpr])> {
    let items = expect_list(root, "define")?;
    match items.first().and_then(SExpr::as_atom) {
        Some("define") => {}
        _ => return syntax("expected (define ...)", root.loc()),
    }
    let Some(header) = items.get(1) else {
        return syntax(format!("missing ({kind} NAME)"), root.loc());
    };
    let h = expect_list(header, kind)?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return syntax(format!("expected ({kind} NAME)"), header.loc());
    }
    let name = expect_name(&h[1], "name")?;
    Ok((name, &items[2..]))
}

/// A `name* - type` sequence. Returns entries with locations.
fn parse_typed_list(items: &[SExpr], vars: bool) -> Result<Vec<(TypedName, Loc)>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Loc)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        if let SExpr::List(_, loc) = item {
            if item.head() == Some("either") {
                return err(PddlErrorKind::Unsupported("either types".into()), *loc);
            }
            return syntax("unexpected list in typed list", *loc);
        }
        let sym = item.as_atom().unwrap_or_default();
        if sym == "-" {
            let Some(ty_expr) = items.get(i + 1) else {
                return syntax("missing type after '-'", item.loc());
            };
            if ty_expr.head() == Some("either") {
                return err(PddlErrorKind::Unsupported("either types".into()), ty_expr.loc());
            }
            let ty = expect_name(ty_expr, "type name")?;
            if pending.is_empty() {
                return syntax("'-' without preceding names", item.loc());
            }
            for (name, loc) in pending.drain(..) {
                out.push((TypedName { name, ty: ty.to_string() }, loc));
            }
            i += 2;
            continue;
        }
        let name = if vars {
            match sym.strip_prefix('?') {
                Some(v) if !v.is_empty() => v.to_string(),
                _ => return syntax(format!("expected variable, found {sym}"), item.loc()),
            }
        } else {
            expect_name(item, "name")?.to_string()
        };
        pending.push((name, item.loc()));
        i += 1;
    }
    for (name, loc) in pending {
        out.push((TypedName { name, ty: OBJECT.to_string() }, loc));
    }
    Ok(out)
}

fn check_type(domain: &DomainAst, ty: &str, loc: Loc) -> Result<()> {
    if domain.has_type(ty) {
        Ok(())
    } else {
        err(PddlErrorKind::UndeclaredType(ty.to_string()), loc)
    }
}

pub fn parse_domain(text: &str) -> Result<DomainAst> {
    let root = read_one(text)?;
    let (name, sections) = parse_header(&root, "domain")?;
    let mut domain = DomainAst {
        name: name.to_string(),
        requirements: BTreeSet::new(),
        types: BTreeMap::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        schemas: Vec::new(),
    };
    let mut type_locs: Vec<(String, String, Loc)> = Vec::new();
    let mut predicate_exprs: Vec<&SExpr> = Vec::new();
    let mut constant_exprs: Vec<&SExpr> = Vec::new();
    let mut action_exprs: Vec<&SExpr> = Vec::new();

    for section in sections {
        let items = expect_list(section, "domain section")?;
        let key = items.first().and_then(SExpr::as_atom).unwrap_or_default();
        match key {
            ":requirements" => {
                for r in &items[1..] {
                    let kw = expect_atom(r, "requirement")?;
                    match Requirement::from_keyword(kw) {
                        Some(req) => {
                            domain.requirements.insert(req);
                        }
                        None => return err(PddlErrorKind::UnknownRequirement(kw.to_string()), r.loc()),
                    }
                }
            }
            ":types" => {
                for (tn, loc) in parse_typed_list(&items[1..], false)? {
                    type_locs.push((tn.name, tn.ty, loc));
                }
            }
            ":constants" => constant_exprs.push(section),
            ":predicates" => predicate_exprs.push(section),
            ":action" => action_exprs.push(section),
            other => {
                return err(PddlErrorKind::Unsupported(format!("domain section {other}")), section.loc());
            }
        }
    }

    // Types: names appearing only as parents are declared implicitly.
    for (name, parent, loc) in &type_locs {
        if name == OBJECT {
            continue;
        }
        if let Some(prev) = domain.types.get(name) {
            if prev != parent && prev != OBJECT {
                return err(PddlErrorKind::Duplicate { what: "type", name: name.clone() }, *loc);
            }
        }
        domain.types.insert(name.clone(), parent.clone());
    }
    for (_, parent, _) in &type_locs {
        if parent != OBJECT && !domain.types.contains_key(parent) {
            domain.types.insert(parent.clone(), OBJECT.to_string());
        }
    }
    for (name, _, loc) in &type_locs {
        let mut seen = BTreeSet::new();
        let mut cur = name.as_str();
        while let Some(p) = domain.types.get(cur) {
            if !seen.insert(cur) {
                return err(PddlErrorKind::CyclicType(name.clone()), *loc);
            }
            cur = p;
        }
    }

    for section in constant_exprs {
        let items = section.as_list().unwrap_or_default();
        for (c, loc) in parse_typed_list(&items[1..], false)? {
            check_type(&domain, &c.ty, loc)?;
            if domain.constant_type(&c.name).is_some() {
                return err(PddlErrorKind::Duplicate { what: "constant", name: c.name }, loc);
            }
            domain.constants.push(c);
        }
    }

    for section in predicate_exprs {
        let items = section.as_list().unwrap_or_default();
        for p in &items[1..] {
            let parts = expect_list(p, "predicate declaration")?;
            let Some(head) = parts.first() else {
                return syntax("empty predicate declaration", p.loc());
            };
            let pname = expect_name(head, "predicate name")?;
            if domain.predicate(pname).is_some() || pname == EQUALITY {
                return err(PddlErrorKind::Duplicate { what: "predicate", name: pname.to_string() }, head.loc());
            }
            let mut params = Vec::new();
            for (tn, loc) in parse_typed_list(&parts[1..], true)? {
                check_type(&domain, &tn.ty, loc)?;
                params.push(tn);
            }
            domain.predicates.push(PredicateDecl { name: pname.to_string(), params });
        }
    }

    for section in action_exprs {
        let schema = parse_action(&domain, section)?;
        if domain.schema(&schema.name).is_some() {
            return err(PddlErrorKind::Duplicate { what: "action", name: schema.name }, section.loc());
        }
        domain.schemas.push(schema);
    }
    Ok(domain)
}

fn parse_action(domain: &DomainAst, section: &SExpr) -> Result<ActionSchema> {
    let items = section.as_list().unwrap_or_default();
    let Some(name_expr) = items.get(1) else {
        return syntax("missing action name", section.loc());
    };
    let name = expect_name(name_expr, "action name")?.to_string();
    let mut params: Vec<TypedName> = Vec::new();
    let mut precond = None;
    let mut effect = None;

    let mut i = 2;
    while i < items.len() {
        let key = expect_atom(&items[i], "action keyword")?;
        let Some(value) = items.get(i + 1) else {
            return syntax(format!("missing value for {key}"), items[i].loc());
        };
        match key {
            ":parameters" => {
                let plist = expect_list(value, ":parameters")?;
                for (tn, loc) in parse_typed_list(plist, true)? {
                    check_type(domain, &tn.ty, loc)?;
                    if params.iter().any(|p| p.name == tn.name) {
                        return err(PddlErrorKind::Duplicate { what: "parameter", name: tn.name }, loc);
                    }
                    params.push(tn);
                }
            }
            ":precondition" => precond = Some(value),
            ":effect" => effect = Some(value),
            other => return err(PddlErrorKind::Unsupported(format!("action key {other}")), items[i].loc()),
        }
        i += 2;
    }

    let mut schema = ActionSchema {
        name,
        params,
        precond_pos: BTreeSet::new(),
        precond_neg: BTreeSet::new(),
        add: BTreeSet::new(),
        del: BTreeSet::new(),
    };
    if let Some(p) = precond {
        let mut lits = Vec::new();
        collect_literals(p, &mut lits, true)?;
        for (positive, atom_expr) in lits {
            let atom = lifted_atom(domain, &schema.params, atom_expr)?;
            let set = if positive { &mut schema.precond_pos } else { &mut schema.precond_neg };
            set.insert(atom);
        }
        if let Some(clash) = schema.precond_pos.intersection(&schema.precond_neg).next() {
            return err(PddlErrorKind::ContradictoryPrecondition(clash.to_string()), p.loc());
        }
    }
    if let Some(e) = effect {
        let mut lits = Vec::new();
        collect_literals(e, &mut lits, false)?;
        for (positive, atom_expr) in lits {
            let atom = lifted_atom(domain, &schema.params, atom_expr)?;
            if atom.predicate == EQUALITY {
                return syntax("equality cannot appear in effects", atom_expr.loc());
            }
            let set = if positive { &mut schema.add } else { &mut schema.del };
            set.insert(atom);
        }
    }
    Ok(schema)
}

/// Flattens a conjunction of (possibly negated) atoms.
fn collect_literals<'a>(e: &'a SExpr, out: &mut Vec<(bool, &'a SExpr)>, allow_eq: bool) -> Result<()> {
    let items = expect_list(e, "formula")?;
    match e.head() {
        None if items.is_empty() => Ok(()),
        Some("and") => {
            for sub in &items[1..] {
                collect_literals(sub, out, allow_eq)?;
            }
            Ok(())
        }
        Some("not") => {
            if items.len() != 2 {
                return syntax("not takes exactly one argument", e.loc());
            }
            let inner = &items[1];
            match inner.head() {
                Some("and" | "or" | "not" | "imply" | "forall" | "exists" | "when") | None => {
                    err(PddlErrorKind::Unsupported("negation of a non-atomic formula".into()), inner.loc())
                }
                Some(_) => {
                    out.push((false, inner));
                    Ok(())
                }
            }
        }
        Some(h @ ("or" | "imply" | "forall" | "exists" | "when" | "increase" | "decrease")) => {
            err(PddlErrorKind::Unsupported(h.to_string()), e.loc())
        }
        Some(EQUALITY) if !allow_eq => syntax("equality outside preconditions/goals", e.loc()),
        Some(_) => {
            out.push((true, e));
            Ok(())
        }
        None => syntax("expected atom", e.loc()),
    }
}

fn lifted_atom(domain: &DomainAst, params: &[TypedName], e: &SExpr) -> Result<Atom> {
    let items = e.as_list().unwrap_or_default();
    let pred = expect_atom(&items[0], "predicate")?;
    let expected = if pred == EQUALITY {
        2
    } else {
        match domain.predicate(pred) {
            Some(decl) => decl.params.len(),
            None => return err(PddlErrorKind::UndeclaredPredicate(pred.to_string()), items[0].loc()),
        }
    };
    let found = items.len() - 1;
    if found != expected {
        return err(PddlErrorKind::ArityMismatch { predicate: pred.to_string(), expected, found }, e.loc());
    }
    let mut args = Vec::with_capacity(found);
    for a in &items[1..] {
        let s = expect_atom(a, "term")?;
        if let Some(v) = s.strip_prefix('?') {
            if !params.iter().any(|p| p.name == v) {
                return err(PddlErrorKind::UndeclaredVariable(v.to_string()), a.loc());
            }
            args.push(Term::Var(v.to_string()));
        } else {
            if domain.constant_type(s).is_none() {
                return err(PddlErrorKind::UndeclaredObject(s.to_string()), a.loc());
            }
            args.push(Term::Const(s.to_string()));
        }
    }
    Ok(Atom { predicate: pred.to_string(), args })
}

pub fn parse_problem(text: &str, domain: &DomainAst) -> Result<ProblemAst> {
    let root = read_one(text)?;
    let (name, sections) = parse_header(&root, "problem")?;
    let mut problem = ProblemAst {
        name: name.to_string(),
        domain_name: String::new(),
        objects: Vec::new(),
        init: BTreeSet::new(),
        goal_pos: BTreeSet::new(),
        goal_neg: BTreeSet::new(),
    };
    let mut init_expr = None;
    let mut goal_expr = None;
    let mut domain_seen = false;

    for section in sections {
        let items = expect_list(section, "problem section")?;
        let key = items.first().and_then(SExpr::as_atom).unwrap_or_default();
        match key {
            ":domain" => {
                let Some(d) = items.get(1) else {
                    return syntax("missing domain name", section.loc());
                };
                let dname = expect_name(d, "domain name")?;
                if dname != domain.name {
                    return err(
                        PddlErrorKind::DomainMismatch { expected: domain.name.clone(), found: dname.to_string() },
                        d.loc(),
                    );
                }
                problem.domain_name = dname.to_string();
                domain_seen = true;
            }
            ":requirements" => {
                for r in &items[1..] {
                    let kw = expect_atom(r, "requirement")?;
                    if Requirement::from_keyword(kw).is_none() {
                        return err(PddlErrorKind::UnknownRequirement(kw.to_string()), r.loc());
                    }
                }
            }
            ":objects" => {
                for (o, loc) in parse_typed_list(&items[1..], false)? {
                    check_type(domain, &o.ty, loc)?;
                    if problem.objects.iter().any(|x| x.name == o.name) || domain.constant_type(&o.name).is_some() {
                        return err(PddlErrorKind::Duplicate { what: "object", name: o.name }, loc);
                    }
                    problem.objects.push(o);
                }
            }
            ":init" => init_expr = Some(section),
            ":goal" => goal_expr = Some(section),
            ":metric" => {}
            other => {
                return err(PddlErrorKind::Unsupported(format!("problem section {other}")), section.loc());
            }
        }
    }
    if !domain_seen {
        return syntax("missing (:domain NAME)", root.loc());
    }

    if let Some(section) = init_expr {
        let items = section.as_list().unwrap_or_default();
        for a in &items[1..] {
            expect_list(a, "init atom")?;
            if a.head() == Some("not") {
                return syntax("negative literals are not allowed in :init", a.loc());
            }
            let atom = ground_atom(domain, &problem, a)?;
            if atom.is_equality() {
                return syntax("equality is not allowed in :init", a.loc());
            }
            problem.init.insert(atom);
        }
    }
    let Some(section) = goal_expr else {
        return syntax("missing (:goal ...)", root.loc());
    };
    let items = section.as_list().unwrap_or_default();
    if items.len() != 2 {
        return syntax(":goal takes exactly one formula", section.loc());
    }
    let mut lits = Vec::new();
    collect_literals(&items[1], &mut lits, true)?;
    for (positive, a) in lits {
        let atom = ground_atom(domain, &problem, a)?;
        if positive {
            problem.goal_pos.insert(atom);
        } else {
            problem.goal_neg.insert(atom);
        }
    }
    if let Some(clash) = problem.goal_pos.intersection(&problem.goal_neg).next() {
        return err(PddlErrorKind::ContradictoryPrecondition(clash.to_string()), items[1].loc());
    }
    Ok(problem)
}

fn ground_atom(domain: &DomainAst, problem: &ProblemAst, e: &SExpr) -> Result<GroundAtom> {
    let items = e.as_list().unwrap_or_default();
    let Some(head) = items.first() else {
        return syntax("empty atom", e.loc());
    };
    let pred = expect_atom(head, "predicate")?;
    let param_types: Vec<&str> = if pred == EQUALITY {
        vec![OBJECT, OBJECT]
    } else {
        match domain.predicate(pred) {
            Some(decl) => decl.params.iter().map(|p| p.ty.as_str()).collect(),
            None => return err(PddlErrorKind::UndeclaredPredicate(pred.to_string()), head.loc()),
        }
    };
    let found = items.len() - 1;
    if found != param_types.len() {
        return err(
            PddlErrorKind::ArityMismatch { predicate: pred.to_string(), expected: param_types.len(), found },
            e.loc(),
        );
    }
    let mut args = Vec::with_capacity(found);
    for (a, expected) in items[1..].iter().zip(param_types) {
        let obj = expect_atom(a, "object")?;
        if obj.starts_with('?') {
            return syntax(format!("variable {obj} in ground atom"), a.loc());
        }
        let Some(actual) = problem.object_type(domain, obj) else {
            return err(PddlErrorKind::UndeclaredObject(obj.to_string()), a.loc());
        };
        if !domain.is_subtype(actual, expected) {
            return err(
                PddlErrorKind::TypeMismatch {
                    object: obj.to_string(),
                    actual: actual.to_string(),
                    expected: expected.to_string(),
                },
                a.loc(),
            );
        }
        args.push(obj.to_string());
    }
    Ok(GroundAtom { predicate: pred.to_string(), args })
}
