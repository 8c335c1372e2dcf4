use super::*;
use crate::pddl::{parse_problem, print_problem};
use crate::validator::{parse_plan, validate, Verdict};

fn check_oracle(set: &TaskSet) {
    for (task, plan) in set.tasks.iter().zip(oracle_plans(set, Execution::Parallel)) {
        let plan = plan.unwrap_or_else(|e| panic!("{}: {e}", task.task_id));
        let v = validate(&set.domain, &task.problem, &plan);
        assert!(v.is_valid(), "{}: {v:?}\n{}", task.task_id, plan.to_text());
    }
}

#[test]
fn out_of_range_params() {
    for (d, bad) in
        [(DomainId::Blocksworld, 1), (DomainId::Blocksworld, 11), (DomainId::Rovers, 0), (DomainId::Sokoban, 8)]
    {
        assert!(matches!(generate(&TaskSpec::new(d, bad, 1)), Err(GenError::ParamOutOfRange { .. })), "{d} {bad}");
    }
}

#[test]
fn blocksworld_two_blocks() {
    let p = gen_blocksworld(&TaskSpec::new(DomainId::Blocksworld, 2, 1)).unwrap();
    assert_eq!(p.objects.len(), 2);
    let plan = solve_blocksworld(&p);
    assert!(plan.len() <= 4);
    assert!(validate(&DomainId::Blocksworld.domain(), &p, &plan).is_valid());
}

#[test]
fn blocksworld_swap_fixture() {
    let d = DomainId::Blocksworld.domain();
    let p = parse_problem(crate::domains::BLOCKSWORLD_2SWAP, &d).unwrap();
    let plan = solve_blocksworld(&p);
    let expected = parse_plan("(unstack b1 b2)\n(put-down b1)\n(pick-up b2)\n(stack b2 b1)").unwrap();
    assert_eq!(plan, expected);
}

#[test]
fn blocksworld_identity_is_empty_plan() {
    let d = DomainId::Blocksworld.domain();
    let p = parse_problem(
        "(define (problem id) (:domain blocksworld) (:objects a b c)
          (:init (handempty) (ontable a) (on b a) (clear b) (ontable c) (clear c))
          (:goal (and (on b a) (ontable a) (ontable c))))",
        &d,
    )
    .unwrap();
    assert!(solve_blocksworld(&p).is_empty());
}

#[test]
fn blocksworld_partial_goal() {
    let d = DomainId::Blocksworld.domain();
    let p = parse_problem(
        "(define (problem part) (:domain blocksworld) (:objects a b c)
          (:init (handempty) (ontable a) (on b a) (on c b) (clear c))
          (:goal (on a c)))",
        &d,
    )
    .unwrap();
    let plan = solve_blocksworld(&p);
    assert!(validate(&d, &p, &plan).is_valid(), "{}", plan.to_text());
}

#[test]
fn small_tasksets_solve_and_validate() {
    for d in DomainId::ALL {
        check_oracle(&gen_taskset(d, 12, 3, &BTreeMap::new()).unwrap());
    }
}

#[test]
fn taskset_is_reproducible_and_prefix_stable() {
    for d in DomainId::ALL {
        let a = gen_taskset_with(d, 8, 42, &BTreeMap::new(), Execution::Sequential).unwrap();
        let b = gen_taskset_with(d, 12, 42, &BTreeMap::new(), Execution::Parallel).unwrap();
        assert_eq!(a.tasks[..], b.tasks[..8]);
    }
}

#[test]
fn generated_problems_roundtrip_through_text() {
    for d in DomainId::ALL {
        let set = gen_taskset(d, 4, 11, &BTreeMap::new()).unwrap();
        for t in &set.tasks {
            assert_eq!(parse_problem(&print_problem(&t.problem), &set.domain).unwrap(), t.problem);
        }
    }
}

#[test]
fn sokoban_witness_is_valid() {
    let d = DomainId::Sokoban.domain();
    for b in 1..=7 {
        for s in 0..5 {
            let inst = gen_sokoban(&TaskSpec::new(DomainId::Sokoban, b, s)).unwrap();
            let v = validate(&d, &inst.problem, &inst.witness);
            assert!(v.is_valid(), "b={b} seed={s}: {v:?}");
        }
    }
}

#[test]
fn sokoban_bfs_not_longer_than_witness() {
    let d = DomainId::Sokoban.domain();
    let inst = gen_sokoban(&TaskSpec::new(DomainId::Sokoban, 1, 7)).unwrap();
    let plan = solve_sokoban_bfs(&inst.problem, SOKOBAN_NODE_BUDGET).unwrap();
    assert!(matches!(validate(&d, &inst.problem, &plan), Verdict::Valid { .. }));
    assert!(plan.len() <= inst.witness.len());
}

#[test]
fn taskset_files_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let set = gen_taskset(DomainId::Rovers, 3, 5, &BTreeMap::new()).unwrap();
    let lengths: Vec<Option<usize>> =
        oracle_plans(&set, Execution::Sequential).into_iter().map(|p| p.ok().map(|p| p.len())).collect();
    let written = write_taskset(&set, &lengths, dir.path()).unwrap();
    let (back, manifest) = read_taskset(dir.path()).unwrap();
    assert_eq!(manifest, written);
    assert_eq!(back, set);
    assert!(dir.path().join("task-rovers-0001.pddl").exists());
}

#[test]
fn domain_id_parsing() {
    assert_eq!("Sokoban".parse::<DomainId>(), Ok(DomainId::Sokoban));
    assert!("ferry".parse::<DomainId>().is_err());
    assert_eq!(serde_json::to_string(&DomainId::Rovers).unwrap(), "\"rovers\"");
}

/// Shortest plan length by breadth-first search over the full state space.
fn optimal_length(domain: &crate::pddl::DomainAst, p: &crate::pddl::ProblemAst) -> usize {
    use crate::pddl::{applicable, apply, goal_satisfied, initial_state};
    use crate::validator::{ground_step, PlanStep};
    use std::collections::{HashSet, VecDeque};
    let objs: Vec<&str> = p.objects.iter().map(|o| o.name.as_str()).collect();
    let mut actions = Vec::new();
    for s in &domain.schemas {
        let mut combos: Vec<Vec<&str>> = vec![vec![]];
        for _ in &s.params {
            combos =
                combos.into_iter().flat_map(|c| objs.iter().map(move |o| [c.clone(), vec![*o]].concat())).collect();
        }
        actions.extend(combos.into_iter().filter_map(|c| ground_step(domain, p, &PlanStep::new(&s.name, c)).ok()));
    }
    let start = initial_state(p);
    let mut seen = HashSet::from([start.atoms.clone()]);
    let mut queue = VecDeque::from([(start, 0)]);
    while let Some((s, d)) = queue.pop_front() {
        if goal_satisfied(&s, p) {
            return d;
        }
        for a in actions.iter().filter(|a| applicable(&s, a)) {
            let next = apply(&s, a).unwrap();
            if seen.insert(next.atoms.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    panic!("unsolvable");
}

/// Some three-block instances need more than 2n actions even when solved
/// optimally, so no oracle can meet a 2n bound on every instance.
#[test]
fn blocksworld_optimal_plans_can_exceed_2n() {
    let domain = DomainId::Blocksworld.domain();
    let mut worst = 0;
    for seed in 0..300 {
        let p = gen_blocksworld(&TaskSpec::new(DomainId::Blocksworld, 3, seed)).unwrap();
        let opt = optimal_length(&domain, &p);
        let ours = solve_blocksworld(&p).len();
        assert!(opt <= ours && ours <= 12, "seed {seed}: optimal {opt}, ours {ours}");
        worst = worst.max(opt);
    }
    assert_eq!(worst, 8);
}
