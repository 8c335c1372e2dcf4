mod support;

use std::collections::BTreeSet;

use plancycle::curation::{aggregate, aggregate_uncurated, filter_valid, select_best, ValidTrace};
use plancycle::generators::DomainId;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use support::{random_history, tasks_with_plans};

fn valid_by_gen(
    history: &[Vec<plancycle::policy::Trace>],
    set: &plancycle::generators::TaskSet,
) -> Vec<Vec<ValidTrace>> {
    history.iter().map(|g| filter_valid(g, set)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selection_ignores_candidate_order(seed in any::<u64>()) {
        let (set, plans) = tasks_with_plans(DomainId::Blocksworld, 6, seed);
        let mut rng = plancycle::seed::rng(seed);
        let hist = random_history(&set, &plans, 3, 2, &mut rng);
        let mut all: Vec<ValidTrace> = valid_by_gen(&hist, &set).concat();
        if all.is_empty() {
            return Ok(());
        }
        let best = select_best(&all).unwrap().clone();
        prop_assert!(all.iter().all(|v| best.rank() <= v.rank()));
        all.shuffle(&mut rng);
        prop_assert_eq!(select_best(&all).unwrap().rank(), best.rank());
    }

    #[test]
    fn aggregation_is_monotone(seed in any::<u64>()) {
        let (set, plans) = tasks_with_plans(DomainId::Blocksworld, 6, seed);
        let mut rng = plancycle::seed::rng(seed);
        let hist = random_history(&set, &plans, 4, 2, &mut rng);
        let valid = valid_by_gen(&hist, &set);
        let mut prev = aggregate(&[]);
        for g in 1..=valid.len() {
            let cur = aggregate(&valid[..g]);
            for (id, e) in &cur.entries {
                prop_assert_eq!(id, &e.trace.task_id);
            }
            let tasks: BTreeSet<&String> = valid[..g].iter().flatten().map(|v| &v.trace.task_id).collect();
            prop_assert_eq!(cur.len(), tasks.len());
            for (id, old) in &prev.entries {
                let new = cur.entries.get(id);
                prop_assert!(new.is_some(), "task {} dropped", id);
                prop_assert!(new.unwrap().rank() <= old.rank());
            }
            let unc = aggregate_uncurated(&hist[..g], &set);
            prop_assert!(cur.len() <= unc.len());
            prev = cur;
        }
    }
}

#[test]
fn empty_candidates_is_an_error() {
    assert!(select_best(std::iter::empty()).is_err());
    assert!(aggregate(&[vec![], vec![]]).is_empty());
}
