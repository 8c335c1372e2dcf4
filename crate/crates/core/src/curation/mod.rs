//! Turning validated traces into fine-tuning data: keep the valid ones,
//! pick one best trace per task across all generations so far, export.

mod export;

pub use export::{export_sft, ExportError, Hyperparameters, SftManifest, SftRecord, SftSource};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::TaskSet;
use crate::par::{self, Execution};
use crate::policy::{FinishReason, Trace};
use crate::validator::{extract_plan, validate, Plan};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidTrace {
    pub trace: Trace,
    pub plan: Plan,
    pub plan_length: usize,
    pub reasoning_tokens: u64,
}

impl ValidTrace {
    /// Selection key; smaller is better.
    pub fn rank(&self) -> (usize, u64, u32, u32) {
        (self.plan_length, self.reasoning_tokens, self.trace.generation, self.trace.run)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub entries: BTreeMap<String, ValidTrace>,
    pub source_generations: BTreeSet<u32>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A training sample in the no-curation ablation, valid or not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncuratedSample {
    pub trace: Trace,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no candidates to select from")]
pub struct EmptyCandidates;

/// The validated plan of a trace, if it has one.
pub fn check_trace(trace: &Trace, taskset: &TaskSet) -> Option<ValidTrace> {
    if trace.finish_reason != FinishReason::Stop {
        return None;
    }
    let task = taskset.get(&trace.task_id)?;
    let plan = extract_plan(&trace.raw_text).ok()?;
    let plan_length = validate(&taskset.domain, &task.problem, &plan).plan_length()?;
    Some(ValidTrace { trace: trace.clone(), plan, plan_length, reasoning_tokens: trace.reasoning_tokens })
}

/// Valid traces in input order.
pub fn filter_valid(traces: &[Trace], taskset: &TaskSet) -> Vec<ValidTrace> {
    filter_valid_with(traces, taskset, Execution::Parallel)
}

pub fn filter_valid_with(traces: &[Trace], taskset: &TaskSet, exec: Execution) -> Vec<ValidTrace> {
    par::map(exec, traces, |t| check_trace(t, taskset)).into_iter().flatten().collect()
}

/// Shortest plan, then fewest reasoning tokens, then earliest generation,
/// then lowest run index.
pub fn select_best<'a, I>(candidates: I) -> Result<&'a ValidTrace, EmptyCandidates>
where
    I: IntoIterator<Item = &'a ValidTrace>,
{
    candidates.into_iter().min_by_key(|c| c.rank()).ok_or(EmptyCandidates)
}

/// One best trace per task over all given generations.
pub fn aggregate(valid_by_generation: &[Vec<ValidTrace>]) -> TrainingSet {
    let mut by_task: BTreeMap<&str, Vec<&ValidTrace>> = BTreeMap::new();
    for v in valid_by_generation.iter().flatten() {
        by_task.entry(&v.trace.task_id).or_default().push(v);
    }
    let entries: BTreeMap<String, ValidTrace> = by_task
        .into_iter()
        .map(|(id, cands)| {
            let best = select_best(cands).expect("grouped candidates are non-empty");
            (id.to_string(), best.clone())
        })
        .collect();
    let source_generations = valid_by_generation.iter().flatten().map(|v| v.trace.generation).collect();
    TrainingSet { entries, source_generations }
}

/// Every trace that did not hit the token limit, valid or not.
pub fn aggregate_uncurated(traces_by_generation: &[Vec<Trace>], taskset: &TaskSet) -> Vec<UncuratedSample> {
    let kept: Vec<&Trace> =
        traces_by_generation.iter().flatten().filter(|t| t.finish_reason != FinishReason::Length).collect();
    par::map(Execution::Parallel, &kept, |t| UncuratedSample {
        trace: (*t).clone(),
        valid: check_trace(t, taskset).is_some(),
    })
}
