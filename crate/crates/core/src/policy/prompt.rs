use serde::{Deserialize, Serialize};

use crate::domains;
use crate::pddl::{print_domain, print_problem, DomainAst, ProblemAst};

pub const INSTRUCTION: &str = "You are generating plans for PDDL tasks. You will be given the PDDL domain and the PDDL instance, and you need to return the plan.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub domain: String,
    pub problem: String,
    pub plan: String,
}

/// Worked examples placed before the task. The standard bank holds one
/// Gripper and one Logistics task, each with a valid but non-optimal plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleBank {
    pub examples: Vec<Example>,
}

impl ExampleBank {
    pub fn standard() -> Self {
        let ex = |d: &str, p: &str, plan: &str| Example {
            domain: d.trim().to_string(),
            problem: p.trim().to_string(),
            plan: plan.trim().to_string(),
        };
        Self {
            examples: vec![
                ex(domains::GRIPPER_DOMAIN, domains::GRIPPER_PROBLEM, domains::GRIPPER_PLAN),
                ex(domains::LOGISTICS_DOMAIN, domains::LOGISTICS_PROBLEM, domains::LOGISTICS_PLAN),
            ],
        }
    }
}

impl Default for ExampleBank {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub instruction: String,
    pub examples: Vec<Example>,
    pub domain_text: String,
    pub problem_text: String,
}

impl Prompt {
    /// Instruction, then the examples, then the task; sections separated by
    /// blank lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.instruction);
        out.push_str("\n\n");
        for (i, ex) in self.examples.iter().enumerate() {
            out.push_str(&format!(
                "Example {}\n\nDomain:\n{}\n\nInstance:\n{}\n\nPlan:\n{}\n\n",
                i + 1,
                ex.domain,
                ex.problem,
                ex.plan
            ));
        }
        out.push_str(&format!(
            "Now solve the following task.\n\nDomain:\n{}\n\nInstance:\n{}\n\nPlan:\n",
            self.domain_text.trim(),
            self.problem_text.trim()
        ));
        out
    }
}

pub fn build_prompt(domain: &DomainAst, problem: &ProblemAst, bank: &ExampleBank) -> Prompt {
    Prompt {
        instruction: INSTRUCTION.to_string(),
        examples: bank.examples.clone(),
        domain_text: print_domain(domain),
        problem_text: print_problem(problem),
    }
}
