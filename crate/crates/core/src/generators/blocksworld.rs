use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GenError, TaskSpec};
use crate::pddl::{GroundAtom, ProblemAst, TypedName, OBJECT};
use crate::seed;
use crate::validator::{Plan, PlanStep};

/// Number of ways to arrange `n` labelled blocks into towers on a table.
pub fn tower_configuration_count(n: usize) -> u64 {
    let mut a = vec![1u64; n + 1];
    for m in 1..=n {
        a[m] = (1..=m).map(|k| binom(m - 1, k - 1) * factorial(k) * a[m - k]).sum();
    }
    a[n]
}

fn binom(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Samples towers (listed bottom to top) uniformly over all configurations.
fn sample_towers(blocks: &[String], rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    let counts: Vec<u64> = (0..=blocks.len()).map(tower_configuration_count).collect();
    let mut rest: Vec<String> = blocks.to_vec();
    let mut towers = Vec::new();
    while !rest.is_empty() {
        let m = rest.len();
        // size of the tower holding rest[0], weighted by completions
        let weights: Vec<u64> = (1..=m).map(|k| binom(m - 1, k - 1) * factorial(k) * counts[m - k]).collect();
        let mut pick = rng.random_range(0..weights.iter().sum::<u64>());
        let mut k = 1;
        for (i, w) in weights.iter().enumerate() {
            if pick < *w {
                k = i + 1;
                break;
            }
            pick -= w;
        }
        let first = rest.remove(0);
        rest.shuffle(rng);
        let mut tower: Vec<String> = rest.drain(..k - 1).collect();
        tower.push(first);
        tower.shuffle(rng);
        rest.sort();
        towers.push(tower);
    }
    towers
}

fn tower_atoms(towers: &[Vec<String>], with_clear: bool) -> BTreeSet<GroundAtom> {
    let mut atoms = BTreeSet::new();
    for t in towers {
        atoms.insert(GroundAtom::new("ontable", [t[0].as_str()]));
        for w in t.windows(2) {
            atoms.insert(GroundAtom::new("on", [w[1].as_str(), w[0].as_str()]));
        }
        if with_clear {
            atoms.insert(GroundAtom::new("clear", [t[t.len() - 1].as_str()]));
        }
    }
    atoms
}

pub fn gen_blocksworld(spec: &TaskSpec) -> Result<ProblemAst, GenError> {
    spec.check_range()?;
    let n = spec.main_param as usize;
    let blocks: Vec<String> = (1..=n).map(|i| format!("b{i}")).collect();
    let mut rng = seed::rng(spec.seed);
    let init_towers = sample_towers(&blocks, &mut rng);
    let goal_towers = sample_towers(&blocks, &mut rng);
    let mut init = tower_atoms(&init_towers, true);
    init.insert(GroundAtom::new::<&str>("handempty", []));
    Ok(ProblemAst {
        name: format!("bw-{n}-{:016x}", spec.seed),
        domain_name: "blocksworld".into(),
        objects: blocks.iter().map(|b| TypedName { name: b.clone(), ty: OBJECT.into() }).collect(),
        init,
        goal_pos: tower_atoms(&goal_towers, false),
        goal_neg: BTreeSet::new(),
    })
}

/// Where a block sits: `None` is the table.
type Support = Option<String>;

struct World {
    below: BTreeMap<String, Support>,
    goal: BTreeMap<String, Support>,
    plan: Vec<PlanStep>,
}

impl World {
    fn above(&self, b: &str) -> Option<&String> {
        self.below.iter().find(|(_, s)| s.as_deref() == Some(b)).map(|(k, _)| k)
    }

    fn wanted_on(&self, b: &str) -> bool {
        self.goal.values().any(|s| s.as_deref() == Some(b))
    }

    /// A block is well placed when it and everything beneath it already
    /// agree with the goal. Blocks the goal does not mention count as well
    /// placed when their support does and nothing else is meant to go there.
    fn well_placed(&self, b: &str) -> bool {
        let here = &self.below[b];
        let ok_here = match self.goal.get(b) {
            Some(want) => want == here,
            None => here.as_deref().is_none_or(|s| !self.wanted_on(s)),
        };
        ok_here && here.as_deref().is_none_or(|s| self.well_placed(s))
    }

    fn unstack_to_table(&mut self, b: &str) {
        let from = self.below[b].clone().expect("only stacked blocks move to the table");
        self.plan.push(PlanStep::new("unstack", [b, from.as_str()]));
        self.plan.push(PlanStep::new("put-down", [b]));
        self.below.insert(b.to_string(), None);
    }

    fn stack(&mut self, b: &str, onto: &str) {
        self.plan.push(PlanStep::new("pick-up", [b]));
        self.plan.push(PlanStep::new("stack", [b, onto]));
        self.below.insert(b.to_string(), Some(onto.to_string()));
    }
}

/// Unstack-then-rebuild: every block that is not well placed goes to the
/// table (top down), then goal towers are built bottom up. Each block moves
/// at most twice, so the plan has at most `4n` actions.
pub fn solve_blocksworld(problem: &ProblemAst) -> Plan {
    let mut below = BTreeMap::new();
    let mut held = None;
    for a in &problem.init {
        match (a.predicate.as_str(), a.args.as_slice()) {
            ("ontable", [x]) => {
                below.insert(x.clone(), None);
            }
            ("on", [x, y]) => {
                below.insert(x.clone(), Some(y.clone()));
            }
            ("holding", [x]) => held = Some(x.clone()),
            _ => {}
        }
    }
    let mut goal = BTreeMap::new();
    for a in &problem.goal_pos {
        match (a.predicate.as_str(), a.args.as_slice()) {
            ("ontable", [x]) => {
                goal.insert(x.clone(), None);
            }
            ("on", [x, y]) => {
                goal.insert(x.clone(), Some(y.clone()));
            }
            _ => {}
        }
    }
    let mut w = World { below, goal, plan: Vec::new() };
    if let Some(x) = held {
        w.plan.push(PlanStep::new("put-down", [x.as_str()]));
        w.below.insert(x, None);
    }

    // phase 1: clear away every misplaced block that is stacked
    loop {
        let tops: Vec<String> = w
            .below
            .iter()
            .filter(|(b, s)| s.is_some() && w.above(b).is_none() && !w.well_placed(b))
            .map(|(b, _)| b.clone())
            .collect();
        if tops.is_empty() {
            break;
        }
        for b in tops {
            w.unstack_to_table(&b);
        }
    }

    // phase 2: stack misplaced blocks onto well-placed clear destinations
    loop {
        let next = w.below.keys().find_map(|b| {
            if w.well_placed(b) {
                return None;
            }
            let dest = w.goal.get(b)?.clone()?;
            (w.well_placed(&dest) && w.above(&dest).is_none()).then(|| (b.clone(), dest))
        });
        match next {
            Some((b, dest)) => w.stack(&b, &dest),
            None => break,
        }
    }
    Plan::new(w.plan)
}
