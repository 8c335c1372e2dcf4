use plancycle::generators::{self, solve, DomainId, TaskSpec, SOKOBAN_NODE_BUDGET};
use plancycle::pddl::{parse_problem, print_problem};
use plancycle::validator::validate;
use proptest::prelude::*;

fn domain_strategy() -> impl Strategy<Value = DomainId> {
    prop_oneof![Just(DomainId::Blocksworld), Just(DomainId::Rovers), Just(DomainId::Sokoban)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn blocksworld_plans_move_each_block_at_most_twice(n in 2u32..=10, seed in any::<u64>()) {
        let spec = TaskSpec::new(DomainId::Blocksworld, n, seed);
        let p = generators::generate(&spec).unwrap();
        let plan = solve(DomainId::Blocksworld, &p).unwrap();
        prop_assert!(validate(&DomainId::Blocksworld.domain(), &p, &plan).is_valid());
        prop_assert!(plan.len() <= 4 * n as usize);
    }

    #[test]
    fn rovers_greedy_plans_validate(r in 1u32..=5, seed in any::<u64>()) {
        let spec = TaskSpec::new(DomainId::Rovers, r, seed);
        let p = generators::generate(&spec).unwrap();
        let plan = solve(DomainId::Rovers, &p).unwrap();
        prop_assert!(validate(&DomainId::Rovers.domain(), &p, &plan).is_valid());
    }

    #[test]
    fn small_sokoban_is_solved_by_search(b in 1u32..=2, seed in any::<u64>()) {
        let spec = TaskSpec::new(DomainId::Sokoban, b, seed);
        let p = generators::generate(&spec).unwrap();
        let plan = generators::solve_sokoban_bfs(&p, SOKOBAN_NODE_BUDGET).unwrap();
        prop_assert!(validate(&DomainId::Sokoban.domain(), &p, &plan).is_valid());
    }

    #[test]
    fn generation_is_a_function_of_the_spec(d in domain_strategy(), seed in any::<u64>()) {
        let (lo, hi) = d.param_range();
        let spec = TaskSpec::new(d, (lo + hi) / 2, seed);
        let a = generators::generate(&spec).unwrap();
        prop_assert_eq!(&a, &generators::generate(&spec).unwrap());
        // and survives a print/parse round trip
        let back = parse_problem(&print_problem(&a), &d.domain()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn out_of_range_parameters_are_rejected(d in domain_strategy(), seed in any::<u64>()) {
        let (lo, hi) = d.param_range();
        prop_assert!(generators::generate(&TaskSpec::new(d, hi + 1, seed)).is_err());
        if lo > 0 {
            prop_assert!(generators::generate(&TaskSpec::new(d, lo - 1, seed)).is_err());
        }
    }
}
