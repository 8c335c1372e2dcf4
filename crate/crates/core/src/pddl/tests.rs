use std::collections::BTreeSet;

use super::*;
use crate::domains;

fn bw() -> DomainAst {
    parse_domain(domains::BLOCKSWORLD).unwrap()
}

fn atom(p: &str, args: &[&str]) -> GroundAtom {
    GroundAtom::new(p, args.iter().copied())
}

#[test]
fn blocksworld_domain_has_four_operators() {
    let d = bw();
    let names: BTreeSet<&str> = d.schemas.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, BTreeSet::from(["pick-up", "put-down", "stack", "unstack"]));
    let unstack = d.schema("unstack").unwrap();
    assert_eq!(unstack.params.len(), 2);
    assert_eq!(unstack.precond_pos.len(), 3);
    assert_eq!(unstack.add.len(), 2);
    assert_eq!(unstack.del.len(), 3);
    assert_eq!(d.predicate("handempty").unwrap().params.len(), 0);
}

#[test]
fn minimal_domain() {
    let d =
        parse_domain("(define (domain d) (:predicates (p)) (:action a :precondition (p) :effect (not (p))))").unwrap();
    assert_eq!(d.schemas.len(), 1);
    let a = &d.schemas[0];
    assert!(a.add.is_empty());
    assert_eq!(a.del, BTreeSet::from([Atom { predicate: "p".into(), args: vec![] }]));
}

#[test]
fn undeclared_predicate_reports_location() {
    let err = parse_domain("(define (domain d)\n (:predicates (p))\n (:action a :precondition (q) :effect (p)))")
        .unwrap_err();
    assert_eq!(err.kind, PddlErrorKind::UndeclaredPredicate("q".into()));
    assert_eq!(err.loc, Loc { line: 3, col: 28 });
}

#[test]
fn domain_errors() {
    type Matcher = fn(&PddlErrorKind) -> bool;
    let cases: &[(&str, Matcher)] = &[
        (
            "(define (domain d) (:requirements :adl) (:predicates (p)))",
            |k| matches!(k, PddlErrorKind::UnknownRequirement(r) if r == ":adl"),
        ),
        (
            "(define (domain d) (:predicates (p ?x - thing)))",
            |k| matches!(k, PddlErrorKind::UndeclaredType(t) if t == "thing"),
        ),
        (
            "(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :precondition (p ?x ?x) :effect (p ?x)))",
            |k| matches!(k, PddlErrorKind::ArityMismatch { expected: 1, found: 2, .. }),
        ),
        (
            "(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :precondition (p ?y) :effect (p ?x)))",
            |k| matches!(k, PddlErrorKind::UndeclaredVariable(v) if v == "y"),
        ),
        (
            "(define (domain d) (:predicates (p) (P)))",
            |k| matches!(k, PddlErrorKind::Duplicate { what: "predicate", .. }),
        ),
        (
            "(define (domain d) (:predicates (p)) (:action a :effect (p)) (:action A :effect (p)))",
            |k| matches!(k, PddlErrorKind::Duplicate { what: "action", .. }),
        ),
        (
            "(define (domain d) (:predicates (p)) (:action a :precondition (and (p) (not (p))) :effect (p)))",
            |k| matches!(k, PddlErrorKind::ContradictoryPrecondition(_)),
        ),
        (
            "(define (domain d) (:predicates (p)) (:action a :precondition (or (p) (p)) :effect (p)))",
            |k| matches!(k, PddlErrorKind::Unsupported(_)),
        ),
        (
            "(define (domain d) (:types a - b b - a) (:predicates (p)))",
            |k| matches!(k, PddlErrorKind::CyclicType(_)),
        ),
        ("(define (domain d) (:predicates (p))", |k| matches!(k, PddlErrorKind::Syntax(_))),
    ];
    for (src, check) in cases {
        let e = parse_domain(src).unwrap_err();
        assert!(check(&e.kind), "{src}: got {e}");
        assert!(e.loc.line >= 1 && e.loc.col >= 1);
    }
}

#[test]
fn two_block_problem() {
    let d = bw();
    let p = parse_problem(domains::BLOCKSWORLD_2SWAP, &d).unwrap();
    assert_eq!(p.objects.len(), 2);
    assert!(p.objects.iter().all(|o| o.ty == OBJECT));
    assert!(p.init.contains(&atom("on", &["b1", "b2"])));
    assert_eq!(p.goal_pos.len(), 2);
}

#[test]
fn problem_errors() {
    let d = bw();
    let e =
        parse_problem("(define (problem p) (:domain other) (:objects a) (:init) (:goal (ontable a)))", &d).unwrap_err();
    assert!(matches!(e.kind, PddlErrorKind::DomainMismatch { .. }));
    let e = parse_problem(
        "(define (problem p) (:domain blocksworld) (:objects a) (:init (on a z)) (:goal (ontable a)))",
        &d,
    )
    .unwrap_err();
    assert_eq!(e.kind, PddlErrorKind::UndeclaredObject("z".into()));
    let e =
        parse_problem("(define (problem p) (:domain blocksworld) (:objects a) (:init (on a)) (:goal (ontable a)))", &d)
            .unwrap_err();
    assert!(matches!(e.kind, PddlErrorKind::ArityMismatch { .. }));
}

#[test]
fn problem_type_checking() {
    let d = parse_domain(domains::SOKOBAN).unwrap();
    let src =
        "(define (problem p) (:domain sokoban) (:objects l1 - location b - box) (:init (at l1 l1)) (:goal (at b l1)))";
    let e = parse_problem(src, &d).unwrap_err();
    assert!(matches!(e.kind, PddlErrorKind::TypeMismatch { .. }), "{e}");
}

#[test]
fn roundtrip_fixtures() {
    for (dom_src, prob_src) in domains::all_fixture_pairs() {
        let d = parse_domain(dom_src).unwrap();
        let d2 = parse_domain(&print_domain(&d)).unwrap();
        assert_eq!(d, d2);
        let p = parse_problem(prob_src, &d).unwrap();
        let p2 = parse_problem(&print_problem(&p), &d).unwrap();
        assert_eq!(p, p2);
    }
}

#[test]
fn apply_semantics() {
    let p = atom("p", &[]);
    let q = atom("q", &[]);
    let act = GroundAction {
        schema: "a".into(),
        args: vec![],
        precond_pos: BTreeSet::new(),
        precond_neg: BTreeSet::new(),
        add: BTreeSet::from([q.clone()]),
        del: BTreeSet::from([p.clone()]),
    };
    let s = State::new(BTreeSet::from([p.clone()]));
    assert_eq!(apply(&s, &act).unwrap().atoms, BTreeSet::from([q]));

    // add wins over delete
    let both = GroundAction { add: BTreeSet::from([p.clone()]), del: BTreeSet::from([p.clone()]), ..act };
    assert_eq!(apply(&State::default(), &both).unwrap().atoms, BTreeSet::from([p]));
}

#[test]
fn unstack_from_two_block_init() {
    let d = bw();
    let prob = parse_problem(domains::BLOCKSWORLD_2SWAP, &d).unwrap();
    let schema = d.schema("unstack").unwrap();
    let act = ground(&d, schema, &positional_binding(schema, &["b1".into(), "b2".into()]), &prob).unwrap();
    let s = initial_state(&prob);
    assert!(applicable(&s, &act));
    let next = apply(&s, &act).unwrap();
    assert!(next.holds(&atom("holding", &["b1"])));
    assert!(next.holds(&atom("clear", &["b2"])));
    assert!(!next.holds(&atom("on", &["b1", "b2"])));
    assert!(!goal_satisfied(&next, &prob));

    let pickup = d.schema("pick-up").unwrap();
    let bad = ground(&d, pickup, &positional_binding(pickup, &["b1".into()]), &prob).unwrap();
    assert!(!applicable(&s, &bad));
    assert!(matches!(apply(&s, &bad), Err(GroundError::PreconditionViolated(_))));
}

#[test]
fn ground_errors() {
    let d = parse_domain(domains::SOKOBAN).unwrap();
    let prob = parse_problem(
        "(define (problem p) (:domain sokoban) (:objects l1 l2 - location up - direction) (:init (at-robot l1)) (:goal (at-robot l2)))",
        &d,
    )
    .unwrap();
    let mv = d.schema("move").unwrap();
    let partial = positional_binding(mv, &["l1".into(), "l2".into()]);
    assert_eq!(ground(&d, mv, &partial, &prob), Err(GroundError::IncompleteBinding("dir".into())));
    let wrong = positional_binding(mv, &["l1".into(), "up".into(), "up".into()]);
    assert!(matches!(ground(&d, mv, &wrong, &prob), Err(GroundError::TypeViolation { .. })));
    let unknown = positional_binding(mv, &["l1".into(), "l9".into(), "up".into()]);
    assert_eq!(ground(&d, mv, &unknown, &prob), Err(GroundError::UnknownObject("l9".into())));
}

#[test]
fn equality_preconditions() {
    let d = parse_domain(domains::appendix("ferry").0).unwrap();
    let prob = parse_problem(domains::appendix("ferry").1, &d).unwrap();
    let sail = d.schema("sail").unwrap();
    let same = ground(&d, sail, &positional_binding(sail, &["l1".into(), "l1".into()]), &prob).unwrap();
    let s = initial_state(&prob);
    assert!(!applicable(&s, &same));
    let diff = ground(&d, sail, &positional_binding(sail, &["l1".into(), "l0".into()]), &prob).unwrap();
    assert!(applicable(&s, &diff));
}

#[test]
fn case_insensitive_identifiers() {
    let d = parse_domain(&domains::BLOCKSWORLD.to_uppercase()).unwrap();
    assert_eq!(d, bw());
}
