//! Plan validation: the deterministic external judge of whether a trace
//! solves a task. Plans are simulated step by step from the initial state and
//! rejected at the first step that is ill-formed or inapplicable.

mod extract;
mod plan;
mod verdict;

pub use extract::{extract_plan, extract_region, split_reasoning, NoPlanFound};
pub use plan::{parse_plan, Plan, PlanParseError, PlanStep};
pub use verdict::{FailureReason, Verdict};

use crate::pddl::{self, DomainAst, GroundAction, ProblemAst, State};

/// Grounds one plan step, or explains why it cannot be grounded.
pub fn ground_step(domain: &DomainAst, problem: &ProblemAst, step: &PlanStep) -> Result<GroundAction, FailureReason> {
    let Some(schema) = domain.schema(&step.name) else {
        return Err(FailureReason::UnknownAction { name: step.name.clone() });
    };
    if schema.params.len() != step.args.len() {
        return Err(FailureReason::BadArity {
            action: step.name.clone(),
            expected: schema.params.len(),
            found: step.args.len(),
        });
    }
    for (param, obj) in schema.params.iter().zip(&step.args) {
        let Some(actual) = problem.object_type(domain, obj) else {
            return Err(FailureReason::UnknownObject { object: obj.clone() });
        };
        if !domain.is_subtype(actual, &param.ty) {
            return Err(FailureReason::TypeMismatch { object: obj.clone(), expected: param.ty.clone() });
        }
    }
    let binding = pddl::positional_binding(schema, &step.args);
    Ok(pddl::ground(domain, schema, &binding, problem).expect("binding is total and type-checked"))
}

/// Simulates `plan` from the problem's initial state and returns the final
/// state, or the index and reason of the first failing step.
pub fn simulate(domain: &DomainAst, problem: &ProblemAst, plan: &Plan) -> Result<State, (usize, FailureReason)> {
    let mut state = pddl::initial_state(problem);
    for (i, step) in plan.steps.iter().enumerate() {
        let action = ground_step(domain, problem, step).map_err(|r| (i, r))?;
        if let Some((atom, negated)) = pddl::first_unmet(&state, &action) {
            return Err((i, FailureReason::PreconditionViolated { atom: atom.to_string(), negated }));
        }
        pddl::apply_in_place(&mut state, &action).expect("applicability checked");
    }
    Ok(state)
}

pub fn validate(domain: &DomainAst, problem: &ProblemAst, plan: &Plan) -> Verdict {
    match simulate(domain, problem, plan) {
        Err((failure_step, reason)) => Verdict::Invalid { failure_step, reason },
        Ok(state) => match pddl::first_unmet_goal(&state, problem) {
            None => Verdict::Valid { plan_length: plan.len() },
            Some((atom, negated)) => Verdict::Invalid {
                failure_step: plan.len(),
                reason: FailureReason::GoalNotSatisfied { literal: atom.to_string(), negated },
            },
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains;
    use crate::pddl::{parse_domain, parse_problem};

    fn two_block() -> (DomainAst, ProblemAst) {
        let d = parse_domain(domains::BLOCKSWORLD).unwrap();
        let p = parse_problem(domains::BLOCKSWORLD_2SWAP, &d).unwrap();
        (d, p)
    }

    #[test]
    fn swap_plan_is_valid() {
        let (d, p) = two_block();
        let plan = parse_plan("(unstack b1 b2)\n(put-down b1)\n(pick-up b2)\n(stack b2 b1)").unwrap();
        assert_eq!(validate(&d, &p, &plan), Verdict::Valid { plan_length: 4 });
    }

    #[test]
    fn pick_up_covered_block_fails_at_step_zero() {
        let (d, p) = two_block();
        let plan = parse_plan("(pick-up b1)").unwrap();
        assert_eq!(
            validate(&d, &p, &plan),
            Verdict::Invalid {
                failure_step: 0,
                reason: FailureReason::PreconditionViolated { atom: "(ontable b1)".into(), negated: false },
            }
        );
    }

    #[test]
    fn empty_plan_on_satisfied_goal() {
        let d = parse_domain(domains::BLOCKSWORLD).unwrap();
        let p = parse_problem(
            "(define (problem t) (:domain blocksworld) (:objects a) (:init (ontable a) (clear a) (handempty)) (:goal (ontable a)))",
            &d,
        )
        .unwrap();
        assert_eq!(validate(&d, &p, &Plan::default()), Verdict::Valid { plan_length: 0 });
    }

    #[test]
    fn goal_not_reached() {
        let (d, p) = two_block();
        let plan = parse_plan("(unstack b1 b2)\n(put-down b1)").unwrap();
        assert_eq!(
            validate(&d, &p, &plan),
            Verdict::Invalid {
                failure_step: 2,
                reason: FailureReason::GoalNotSatisfied { literal: "(on b2 b1)".into(), negated: false },
            }
        );
    }

    #[test]
    fn ill_formed_steps() {
        let (d, p) = two_block();
        let check = |text: &str, expected: FailureReason| {
            let v = validate(&d, &p, &parse_plan(text).unwrap());
            assert_eq!(v, Verdict::Invalid { failure_step: 1, reason: expected }, "{text}");
        };
        check("(unstack b1 b2)\n(fly b1)", FailureReason::UnknownAction { name: "fly".into() });
        check(
            "(unstack b1 b2)\n(put-down b1 b2)",
            FailureReason::BadArity { action: "put-down".into(), expected: 1, found: 2 },
        );
        check("(unstack b1 b2)\n(put-down b7)", FailureReason::UnknownObject { object: "b7".into() });
    }

    #[test]
    fn type_mismatch_is_invalid() {
        let d = parse_domain(domains::SOKOBAN).unwrap();
        let p = parse_problem(
            "(define (problem t) (:domain sokoban) (:objects a b - location up - direction) (:init (at-robot a) (clear b) (adjacent a b up)) (:goal (at-robot b)))",
            &d,
        )
        .unwrap();
        let v = validate(&d, &p, &parse_plan("(move a up b)").unwrap());
        assert_eq!(
            v,
            Verdict::Invalid {
                failure_step: 0,
                reason: FailureReason::TypeMismatch { object: "up".into(), expected: "location".into() },
            }
        );
        assert!(validate(&d, &p, &parse_plan("(move a b up)").unwrap()).is_valid());
    }

    #[test]
    fn appendix_fixture_plans_validate() {
        for (name, dom, prob, plan) in domains::APPENDIX {
            let d = parse_domain(dom).unwrap();
            let p = parse_problem(prob, &d).unwrap();
            let plan = parse_plan(plan).unwrap();
            let v = validate(&d, &p, &plan);
            assert!(v.is_valid(), "{name}: {v:?}");
        }
    }

    #[test]
    fn prompt_exemplar_plans_validate() {
        for (dom, prob, plan) in [
            (domains::GRIPPER_DOMAIN, domains::GRIPPER_PROBLEM, domains::GRIPPER_PLAN),
            (domains::LOGISTICS_DOMAIN, domains::LOGISTICS_PROBLEM, domains::LOGISTICS_PLAN),
        ] {
            let d = parse_domain(dom).unwrap();
            let p = parse_problem(prob, &d).unwrap();
            assert!(validate(&d, &p, &parse_plan(plan).unwrap()).is_valid());
        }
    }

    #[test]
    fn verdict_json_shape() {
        let v = Verdict::Valid { plan_length: 4 };
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"status":"valid","plan_length":4}"#);
        let v = Verdict::Invalid { failure_step: 0, reason: FailureReason::UnknownAction { name: "x".into() } };
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"status":"invalid","failure_step":0,"reason":{"kind":"unknown_action","name":"x"}}"#
        );
    }
}
