mod support;

use plancycle::generators::DomainId;
use plancycle::validator::{parse_plan, validate};
use proptest::prelude::*;
use support::{mutate, naive_validate, outcome_of, tasks_with_plans, Outcome};

fn agree_on(domain: DomainId, seed: u64, mutations: usize) {
    let (set, plans) = tasks_with_plans(domain, 6, seed);
    let mut rng = plancycle::seed::rng(seed ^ 0x5eed);
    for (i, plan) in plans {
        let p = &set.tasks[i].problem;
        assert_eq!(outcome_of(&validate(&set.domain, p, &plan)), Outcome::Valid { plan_length: plan.len() });
        assert_eq!(naive_validate(&set.domain, p, &plan), Outcome::Valid { plan_length: plan.len() });
        for _ in 0..mutations {
            let m = mutate(&plan, &set.domain, p, &mut rng);
            assert_eq!(
                outcome_of(&validate(&set.domain, p, &m)),
                naive_validate(&set.domain, p, &m),
                "{}",
                m.to_text()
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn blocksworld_matches_naive(seed in any::<u64>()) {
        agree_on(DomainId::Blocksworld, seed, 8);
    }

    #[test]
    fn sokoban_matches_naive(seed in any::<u64>()) {
        agree_on(DomainId::Sokoban, seed, 8);
    }

    #[test]
    fn rovers_matches_naive(seed in any::<u64>()) {
        agree_on(DomainId::Rovers, seed, 8);
    }

    /// Printing a plan and parsing it back changes nothing.
    #[test]
    fn plan_text_roundtrip(seed in any::<u64>()) {
        let (_, plans) = tasks_with_plans(DomainId::Rovers, 2, seed);
        for (_, plan) in plans {
            prop_assert_eq!(parse_plan(&plan.to_text()).unwrap(), plan);
        }
    }
}

#[test]
fn every_failure_kind_is_exercised() {
    let mut kinds = std::collections::BTreeSet::new();
    for d in DomainId::ALL {
        let (set, plans) = tasks_with_plans(d, 10, 11);
        let mut rng = plancycle::seed::rng(3);
        for (i, plan) in plans {
            for _ in 0..40 {
                let m = mutate(&plan, &set.domain, &set.tasks[i].problem, &mut rng);
                if let Outcome::Invalid { kind, .. } = naive_validate(&set.domain, &set.tasks[i].problem, &m) {
                    kinds.insert(kind);
                }
            }
        }
    }
    for k in [
        "unknown_action",
        "bad_arity",
        "unknown_object",
        "type_mismatch",
        "precondition_violated",
        "goal_not_satisfied",
    ] {
        assert!(kinds.contains(k), "{k} never produced: {kinds:?}");
    }
}
