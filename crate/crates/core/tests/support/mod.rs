//! Test-only oracles written without touching the library's simulator.

#![allow(dead_code)]

use std::collections::BTreeMap;

use plancycle::generators::{self, DomainId, TaskSet};
use plancycle::pddl::{DomainAst, ProblemAst, Term, OBJECT};
use plancycle::policy::{FinishReason, Trace, Usage};
use plancycle::validator::{FailureReason, Plan, PlanStep, Verdict};
use rand::seq::IndexedRandom;
use rand::Rng;

/// What the naive simulator concluded, reduced to the parts any correct
/// validator must agree on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Valid { plan_length: usize },
    Invalid { failure_step: usize, kind: &'static str },
}

pub fn outcome_of(v: &Verdict) -> Outcome {
    match v {
        Verdict::Valid { plan_length } => Outcome::Valid { plan_length: *plan_length },
        Verdict::Invalid { failure_step, reason } => Outcome::Invalid {
            failure_step: *failure_step,
            kind: match reason {
                FailureReason::UnknownAction { .. } => "unknown_action",
                FailureReason::BadArity { .. } => "bad_arity",
                FailureReason::UnknownObject { .. } => "unknown_object",
                FailureReason::TypeMismatch { .. } => "type_mismatch",
                FailureReason::PreconditionViolated { .. } => "precondition_violated",
                FailureReason::GoalNotSatisfied { .. } => "goal_not_satisfied",
            },
        },
    }
}

fn render(pred: &str, args: &[String]) -> String {
    format!("({} {})", pred, args.join(" "))
}

fn descends(domain: &DomainAst, mut ty: String, want: &str) -> bool {
    loop {
        if ty == want || want == OBJECT {
            return true;
        }
        match domain.types.get(&ty) {
            Some(p) => ty = p.clone(),
            None => return false,
        }
    }
}

/// Straight-line simulation over a list of strings. Slow on purpose: no
/// grounding cache, no sets, every check is a linear scan.
pub fn naive_validate(domain: &DomainAst, problem: &ProblemAst, plan: &Plan) -> Outcome {
    let mut objects: Vec<(String, String)> = Vec::new();
    for o in domain.constants.iter().chain(&problem.objects) {
        objects.push((o.name.clone(), o.ty.clone()));
    }
    let mut state: Vec<String> = problem.init.iter().map(|a| render(&a.predicate, &a.args)).collect();
    let holds = |state: &Vec<String>, pred: &str, args: &[String]| -> bool {
        if pred == "=" {
            return args[0] == args[1];
        }
        state.contains(&render(pred, args))
    };

    for (i, step) in plan.steps.iter().enumerate() {
        let bad = |kind| Outcome::Invalid { failure_step: i, kind };
        let Some(schema) = domain.schemas.iter().find(|s| s.name == step.name) else {
            return bad("unknown_action");
        };
        if schema.params.len() != step.args.len() {
            return bad("bad_arity");
        }
        let mut env: BTreeMap<&str, &str> = BTreeMap::new();
        for (p, a) in schema.params.iter().zip(&step.args) {
            // problem objects shadow constants of the same name
            let Some((_, ty)) = objects.iter().rev().find(|(n, _)| n == a) else {
                return bad("unknown_object");
            };
            if !descends(domain, ty.clone(), &p.ty) {
                return bad("type_mismatch");
            }
            env.insert(p.name.as_str(), a.as_str());
        }
        let inst = |args: &[Term]| -> Vec<String> {
            args.iter()
                .map(|t| match t {
                    Term::Var(v) => env[v.as_str()].to_string(),
                    Term::Const(c) => c.clone(),
                })
                .collect()
        };
        for a in &schema.precond_pos {
            if !holds(&state, &a.predicate, &inst(&a.args)) {
                return bad("precondition_violated");
            }
        }
        for a in &schema.precond_neg {
            if holds(&state, &a.predicate, &inst(&a.args)) {
                return bad("precondition_violated");
            }
        }
        let dels: Vec<String> = schema.del.iter().map(|a| render(&a.predicate, &inst(&a.args))).collect();
        let adds: Vec<String> = schema.add.iter().map(|a| render(&a.predicate, &inst(&a.args))).collect();
        state.retain(|s| !dels.contains(s));
        for a in adds {
            if !state.contains(&a) {
                state.push(a);
            }
        }
    }
    let n = plan.len();
    for g in &problem.goal_pos {
        if !holds(&state, &g.predicate, &g.args) {
            return Outcome::Invalid { failure_step: n, kind: "goal_not_satisfied" };
        }
    }
    for g in &problem.goal_neg {
        if holds(&state, &g.predicate, &g.args) {
            return Outcome::Invalid { failure_step: n, kind: "goal_not_satisfied" };
        }
    }
    Outcome::Valid { plan_length: n }
}

/// A random edit of `plan`. Usually breaks it, occasionally not; callers
/// compare verdicts rather than assume invalidity.
pub fn mutate(plan: &Plan, domain: &DomainAst, problem: &ProblemAst, rng: &mut impl Rng) -> Plan {
    let mut steps = plan.steps.clone();
    let objects: Vec<String> = problem.objects.iter().map(|o| o.name.clone()).collect();
    let random_step = |rng: &mut dyn rand::RngCore| {
        let s = domain.schemas.choose(rng).expect("domain has actions");
        PlanStep::new(&s.name, s.params.iter().map(|_| objects.choose(rng).expect("objects").clone()))
    };
    let n = steps.len();
    match rng.random_range(0..9) {
        0 if n > 0 => {
            steps.remove(rng.random_range(0..n));
        }
        1 if n > 1 => {
            let i = rng.random_range(0..n - 1);
            steps.swap(i, i + 1);
        }
        2 if n > 0 => {
            let i = rng.random_range(0..n);
            steps.insert(i, steps[i].clone());
        }
        3 if n > 0 => {
            let i = rng.random_range(0..n);
            if !steps[i].args.is_empty() {
                let j = rng.random_range(0..steps[i].args.len());
                steps[i].args[j] = objects.choose(rng).expect("objects").clone();
            }
        }
        4 if n > 0 => {
            let i = rng.random_range(0..n);
            steps[i].name = format!("{}-x", steps[i].name);
        }
        5 if n > 0 => {
            let i = rng.random_range(0..n);
            if rng.random_bool(0.5) {
                steps[i].args.pop();
            } else {
                steps[i].args.push(objects[0].clone());
            }
        }
        6 if n > 0 => {
            let i = rng.random_range(0..n);
            if let Some(a) = steps[i].args.first_mut() {
                *a = "no-such-object".into();
            }
        }
        7 => {
            let i = rng.random_range(0..=n);
            let s = random_step(rng);
            steps.insert(i, s);
        }
        _ => {
            steps.truncate(rng.random_range(0..=n));
        }
    }
    Plan::new(steps)
}

/// Task set plus reference plans, skipping tasks without one.
pub fn tasks_with_plans(domain: DomainId, count: usize, seed: u64) -> (TaskSet, Vec<(usize, Plan)>) {
    let set = generators::gen_taskset(domain, count, seed, &Default::default()).expect("generation succeeds");
    let plans = set
        .tasks
        .iter()
        .enumerate()
        .filter_map(|(i, t)| generators::reference_plan(domain, t).ok().map(|p| (i, p)))
        .collect();
    (set, plans)
}

/// Model-style output: filler reasoning, then the plan in a code block.
pub fn raw_trace(reasoning_words: usize, plan: &Plan) -> String {
    let filler = vec!["hmm"; reasoning_words].join(" ");
    format!("<think>\n{filler}\n</think>\n\nPlan:\n```\n{}```\n", plan.to_text())
}

/// Random traces for `gens` generations of `runs` runs over `set`: reference
/// plans with extra moves, mutated plans, cut-off outputs and server errors.
pub fn random_history(
    set: &TaskSet,
    plans: &[(usize, Plan)],
    gens: u32,
    runs: u32,
    rng: &mut impl Rng,
) -> Vec<Vec<Trace>> {
    (0..gens)
        .map(|g| {
            let mut out = Vec::new();
            for r in 0..runs {
                for (i, plan) in plans {
                    if rng.random_bool(0.2) {
                        continue;
                    }
                    let id = &set.tasks[*i].task_id;
                    let words = rng.random_range(0..40);
                    let seed = rng.random();
                    let t = match rng.random_range(0..10) {
                        0 => Trace::failed(id, g, r, seed, "boom".into(), 0),
                        1 => Trace::from_raw(
                            id,
                            g,
                            r,
                            "<think> a b c".into(),
                            FinishReason::Length,
                            Usage::default(),
                            0,
                            seed,
                        ),
                        2..=4 => {
                            let m = mutate(plan, &set.domain, &set.tasks[*i].problem, rng);
                            Trace::from_raw(
                                id,
                                g,
                                r,
                                raw_trace(words, &m),
                                FinishReason::Stop,
                                Usage::default(),
                                0,
                                seed,
                            )
                        }
                        _ => {
                            let p = pad_blocksworld(plan, &set.tasks[*i].problem, rng.random_range(0..3));
                            Trace::from_raw(
                                id,
                                g,
                                r,
                                raw_trace(words, &p),
                                FinishReason::Stop,
                                Usage::default(),
                                0,
                                seed,
                            )
                        }
                    };
                    out.push(t);
                }
            }
            out
        })
        .collect()
}

/// Prepends `k` pick-up/put-down round trips on a block that starts clear
/// on the table, giving a longer plan that is still valid. Other domains
/// and towers without such a block are returned unchanged.
pub fn pad_blocksworld(plan: &Plan, problem: &ProblemAst, k: usize) -> Plan {
    let free = problem.objects.iter().map(|o| o.name.as_str()).find(|b| {
        let has =
            |p: &str| problem.init.iter().any(|a| a.predicate == p && a.args.first().map(String::as_str) == Some(*b));
        has("clear") && has("ontable")
    });
    match free {
        Some(b) if problem.domain_name == "blocksworld" => {
            let mut steps = Vec::new();
            for _ in 0..k {
                steps.push(PlanStep::new("pick-up", [b]));
                steps.push(PlanStep::new("put-down", [b]));
            }
            steps.extend(plan.steps.iter().cloned());
            Plan::new(steps)
        }
        _ => plan.clone(),
    }
}
