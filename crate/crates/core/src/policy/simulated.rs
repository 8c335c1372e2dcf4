use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FinishReason, GenerationRequest, PolicyPort, Trace, Usage};
use crate::curation::{TrainingSet, UncuratedSample};
use crate::generators::{oracle_plans, TaskSet};
use crate::par::Execution;
use crate::pddl::{DomainAst, ProblemAst};
use crate::seed;
use crate::validator::{validate, Plan, PlanStep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Slope of the success logistic.
    pub alpha: f64,
    /// Chance that an otherwise correct answer gets one step dropped or
    /// duplicated.
    pub epsilon: f64,
    /// Weight of task coverage in the skill update.
    pub beta: f64,
    /// Penalty per unit fraction of invalid samples in an uncurated set.
    pub gamma: f64,
    /// Skill of the untrained model.
    pub initial_skill: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { alpha: 1.0, epsilon: 0.1, beta: 2.0, gamma: 2.0, initial_skill: 2.0 }
    }
}

#[derive(Clone)]
struct SimTask {
    difficulty: u32,
    problem: ProblemAst,
    plan: Option<Plan>,
}

/// Success on a task happens with probability `sigmoid(alpha * (skill -
/// difficulty))`, where difficulty is the task's main parameter. The first
/// uniform draw of the trace seed decides success, so a higher skill never
/// turns a success into a failure.
#[derive(Clone)]
pub struct SimulatedPolicy {
    config: SimConfig,
    skill: f64,
    domain: DomainAst,
    tasks: BTreeMap<String, SimTask>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

const HEDGES: [&str; 4] = [
    "Wait, let me re-check the current state.",
    "Hmm, is that precondition really satisfied?",
    "Let me list what holds right now.",
    "Going back over the goal conditions.",
];

impl SimulatedPolicy {
    pub fn new(taskset: &TaskSet, config: SimConfig, exec: Execution) -> Self {
        let plans = oracle_plans(taskset, exec);
        let tasks = taskset
            .tasks
            .iter()
            .zip(plans)
            .map(|(t, plan)| {
                let sim = SimTask { difficulty: t.spec.main_param, problem: t.problem.clone(), plan: plan.ok() };
                (t.task_id.clone(), sim)
            })
            .collect();
        Self { skill: config.initial_skill, config, domain: taskset.domain.clone(), tasks }
    }

    pub fn skill(&self) -> f64 {
        self.skill
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn success_probability(&self, task_id: &str) -> Option<f64> {
        let t = self.tasks.get(task_id)?;
        Some(sigmoid(self.config.alpha * (self.skill - f64::from(t.difficulty))))
    }

    pub fn set_skill_value(&mut self, skill: f64) {
        self.skill = skill;
    }

    fn coverage_skill<'a>(&self, task_ids: impl Iterator<Item = &'a str>) -> Option<f64> {
        let mut covered = 0usize;
        let mut max_param = None;
        for id in task_ids {
            let Some(t) = self.tasks.get(id) else { continue };
            covered += 1;
            max_param = max_param.max(Some(t.difficulty));
        }
        let size = self.tasks.len().max(1) as f64;
        max_param.map(|m| f64::from(m) + self.config.beta * covered as f64 / size)
    }

    /// Stand-in for fine-tuning on `set`: the hardest solved difficulty plus
    /// a bonus for coverage. An empty set leaves the initial skill.
    pub fn set_skill(&mut self, set: &TrainingSet) {
        self.skill = self.coverage_skill(set.entries.keys().map(String::as_str)).unwrap_or(self.config.initial_skill);
    }

    /// Same as [`set_skill`](Self::set_skill) over the valid samples of an
    /// uncurated set, minus `gamma` times the fraction of invalid samples.
    pub fn set_skill_uncurated(&mut self, samples: &[UncuratedSample]) {
        let mut valid: Vec<&str> = samples.iter().filter(|s| s.valid).map(|s| s.trace.task_id.as_str()).collect();
        valid.sort_unstable();
        valid.dedup();
        let base = self.coverage_skill(valid.into_iter()).unwrap_or(self.config.initial_skill);
        let invalid = samples.iter().filter(|s| !s.valid).count() as f64 / samples.len().max(1) as f64;
        self.skill = base - self.config.gamma * invalid;
    }

    fn is_valid(&self, problem: &ProblemAst, steps: &[PlanStep]) -> bool {
        validate(&self.domain, problem, &Plan::new(steps.to_vec())).is_valid()
    }

    /// Drop or duplicate one step so that the plan no longer validates; falls
    /// back to a garbled step when every such edit still validates.
    fn corrupt(&self, problem: &ProblemAst, steps: &[PlanStep], rng: &mut ChaCha8Rng) -> Vec<PlanStep> {
        let n = steps.len();
        let mut edits: Vec<(bool, usize)> = (0..n).flat_map(|i| [(true, i), (false, i)]).collect();
        let start = if edits.is_empty() { 0 } else { rng.random_range(0..edits.len()) };
        edits.rotate_left(start);
        for (drop, i) in edits {
            let mut out = steps.to_vec();
            if drop {
                out.remove(i);
            } else {
                out.insert(i, steps[i].clone());
            }
            if !self.is_valid(problem, &out) {
                return out;
            }
        }
        garble(steps, rng)
    }

    fn reasoning(&self, steps: &[PlanStep], difficulty: u32, rng: &mut ChaCha8Rng) -> String {
        let mut lines = vec!["Let me look at the initial state and the goal.".to_string()];
        for s in steps {
            lines.push(format!("Next, {s} should be applicable here."));
            if rng.random_bool(0.2) {
                lines.push(HEDGES.choose(rng).copied().unwrap_or_default().to_string());
            }
        }
        for _ in 0..rng.random_range(0..=difficulty) {
            lines.push(HEDGES.choose(rng).copied().unwrap_or_default().to_string());
        }
        lines.push("That should reach the goal.".to_string());
        lines.join("\n")
    }
}

fn garble(steps: &[PlanStep], rng: &mut ChaCha8Rng) -> Vec<PlanStep> {
    let mut out = steps.to_vec();
    if out.is_empty() {
        out.push(PlanStep::new::<&str>("wait", []));
        return out;
    }
    let i = rng.random_range(0..out.len());
    if out[i].args.is_empty() {
        out[i].name.push_str("-now");
    } else {
        let j = rng.random_range(0..out[i].args.len());
        out[i].args[j] = "unknown-object".into();
    }
    out
}

fn render(reasoning: &str, steps: &[PlanStep]) -> String {
    let plan: String = steps.iter().map(|s| format!("{s}\n")).collect();
    format!("<think>\n{reasoning}\n</think>\n\nHere is the plan:\n```\n{plan}```\n")
}

impl PolicyPort for SimulatedPolicy {
    fn generate(&self, req: &GenerationRequest<'_>) -> Trace {
        let mut rng = seed::rng(req.seed);
        let u: f64 = rng.random();
        let Some(task) = self.tasks.get(req.task_id) else {
            return Trace::failed(req.task_id, req.generation, req.run, req.seed, "unknown task".into(), 0);
        };
        let p = sigmoid(self.config.alpha * (self.skill - f64::from(task.difficulty)));
        let trace = |raw: String, finish: FinishReason, usage: Usage| {
            Trace::from_raw(req.task_id, req.generation, req.run, raw, finish, usage, 0, req.seed)
        };

        if let (true, Some(plan)) = (u < p, &task.plan) {
            let mut steps = plan.steps.clone();
            if rng.random_bool(self.config.epsilon) {
                steps = self.corrupt(&task.problem, &steps, &mut rng);
            }
            let text = render(&self.reasoning(&steps, task.difficulty, &mut rng), &steps);
            return trace(text, FinishReason::Stop, Usage::default());
        }

        let reference = task.plan.as_ref().map(|p| p.steps.as_slice()).unwrap_or_default();
        match rng.random_range(0..3) {
            0 => {
                // stops early: a strict prefix, garbled if that happens to be valid
                let cut = if reference.is_empty() { 0 } else { rng.random_range(0..reference.len()) };
                let mut steps = reference[..cut].to_vec();
                if self.is_valid(&task.problem, &steps) {
                    steps = garble(reference, &mut rng);
                }
                let text = render(&self.reasoning(&steps, task.difficulty, &mut rng), &steps);
                trace(text, FinishReason::Stop, Usage::default())
            }
            1 => {
                let steps = garble(reference, &mut rng);
                let text = render(&self.reasoning(&steps, task.difficulty, &mut rng), &steps);
                trace(text, FinishReason::Stop, Usage::default())
            }
            _ => {
                // ran out of budget mid-reasoning; the server would report a
                // full token budget
                let text = format!("<think>\n{}", self.reasoning(reference, task.difficulty, &mut rng));
                let budget = req.params.max_tokens;
                let usage = Usage { completion_tokens: Some(budget), reasoning_tokens: Some(budget) };
                trace(text, FinishReason::Length, usage)
            }
        }
    }
}
