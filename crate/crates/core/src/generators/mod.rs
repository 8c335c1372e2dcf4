//! Benchmark instance generators for Blocksworld, Rovers and Sokoban, plus
//! the reference solvers used as oracles.

mod blocksworld;
mod rovers;
mod sokoban;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use blocksworld::{gen_blocksworld, solve_blocksworld, tower_configuration_count};
pub use rovers::{gen_rovers, solve_rovers_greedy, RoversFailure};
pub use sokoban::{gen_sokoban, solve_sokoban_bfs, BudgetExceeded, SokobanInstance};

use crate::domains;
use crate::par::{self, Execution};
use crate::pddl::{self, DomainAst, PddlError, ProblemAst};
use crate::seed;
use crate::validator::Plan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainId {
    Blocksworld,
    Rovers,
    Sokoban,
}

impl DomainId {
    pub const ALL: [DomainId; 3] = [DomainId::Blocksworld, DomainId::Rovers, DomainId::Sokoban];

    pub fn name(self) -> &'static str {
        match self {
            DomainId::Blocksworld => "blocksworld",
            DomainId::Rovers => "rovers",
            DomainId::Sokoban => "sokoban",
        }
    }

    /// Inclusive range of the main difficulty parameter: blocks, rovers, boxes.
    pub fn param_range(self) -> (u32, u32) {
        match self {
            DomainId::Blocksworld => (2, 10),
            DomainId::Rovers => (1, 5),
            DomainId::Sokoban => (1, 7),
        }
    }

    pub fn domain_text(self) -> &'static str {
        match self {
            DomainId::Blocksworld => domains::BLOCKSWORLD,
            DomainId::Rovers => domains::ROVERS,
            DomainId::Sokoban => domains::SOKOBAN,
        }
    }

    pub fn domain(self) -> DomainAst {
        pddl::parse_domain(self.domain_text()).expect("embedded domain parses")
    }
}

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DomainId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "blocksworld" => Ok(DomainId::Blocksworld),
            "rovers" => Ok(DomainId::Rovers),
            "sokoban" => Ok(DomainId::Sokoban),
            other => Err(format!("unknown domain {other:?} (expected blocksworld, rovers or sokoban)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub domain_id: DomainId,
    pub main_param: u32,
    /// Domain-specific knobs (grid size, wall density, waypoint count, ...).
    /// Missing keys fall back to the documented defaults.
    #[serde(default)]
    pub aux_params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl TaskSpec {
    pub fn new(domain_id: DomainId, main_param: u32, seed: u64) -> Self {
        Self { domain_id, main_param, aux_params: BTreeMap::new(), seed }
    }

    pub fn with_aux(mut self, key: &str, value: f64) -> Self {
        self.aux_params.insert(key.to_string(), value);
        self
    }

    pub(crate) fn aux(&self, key: &str, default: f64) -> f64 {
        self.aux_params.get(key).copied().unwrap_or(default)
    }

    fn check_range(&self) -> Result<(), GenError> {
        let (lo, hi) = self.domain_id.param_range();
        if self.main_param < lo || self.main_param > hi {
            return Err(GenError::ParamOutOfRange { domain: self.domain_id, value: self.main_param, lo, hi });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("{domain}: main parameter {value} outside [{lo}, {hi}]")]
    ParamOutOfRange { domain: DomainId, value: u32, lo: u32, hi: u32 },
    #[error("invalid auxiliary parameter {key}: {message}")]
    BadAuxParam { key: String, message: String },
    #[error("generation gave up after {0} attempts")]
    RetriesExhausted(u32),
}

/// Generates one instance of the spec's domain.
pub fn generate(spec: &TaskSpec) -> Result<ProblemAst, GenError> {
    match spec.domain_id {
        DomainId::Blocksworld => gen_blocksworld(spec),
        DomainId::Rovers => gen_rovers(spec),
        DomainId::Sokoban => gen_sokoban(spec).map(|inst| inst.problem),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleFailure {
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
    #[error(transparent)]
    Rovers(#[from] RoversFailure),
}

/// Default BFS node budget for the Sokoban oracle.
pub const SOKOBAN_NODE_BUDGET: usize = 2_000_000;

/// Runs the domain's reference solver.
pub fn solve(domain_id: DomainId, problem: &ProblemAst) -> Result<Plan, OracleFailure> {
    match domain_id {
        DomainId::Blocksworld => Ok(solve_blocksworld(problem)),
        DomainId::Rovers => Ok(solve_rovers_greedy(problem)?),
        DomainId::Sokoban => Ok(solve_sokoban_bfs(problem, SOKOBAN_NODE_BUDGET)?),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub task_id: String,
    pub spec: TaskSpec,
    pub problem: ProblemAst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSet {
    pub domain_id: DomainId,
    pub domain: DomainAst,
    pub tasks: Vec<Task>,
}

impl TaskSet {
    pub fn get(&self, task_id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

pub fn task_id(domain_id: DomainId, index: usize) -> String {
    format!("{}-{index:04}", domain_id.name())
}

/// `count` instances with the main parameter drawn uniformly from the
/// domain's range. Task `i` depends only on `(seed, i)` and `aux`.
pub fn gen_taskset(
    domain_id: DomainId,
    count: usize,
    seed: u64,
    aux: &BTreeMap<String, f64>,
) -> Result<TaskSet, GenError> {
    gen_taskset_with(domain_id, count, seed, aux, Execution::Parallel)
}

pub fn gen_taskset_with(
    domain_id: DomainId,
    count: usize,
    seed: u64,
    aux: &BTreeMap<String, f64>,
    exec: Execution,
) -> Result<TaskSet, GenError> {
    let (lo, hi) = domain_id.param_range();
    let results = par::map_range(exec, count, |i| {
        let task_seed = seed::derive(seed, i as u64);
        let main_param = seed::rng(seed::derive(task_seed, 0)).random_range(lo..=hi);
        let spec = TaskSpec { domain_id, main_param, aux_params: aux.clone(), seed: seed::derive(task_seed, 1) };
        let mut problem = generate(&spec)?;
        let id = task_id(domain_id, i);
        problem.name = id.clone();
        Ok(Task { task_id: id, spec, problem })
    });
    let tasks = results.into_iter().collect::<Result<Vec<_>, GenError>>()?;
    Ok(TaskSet { domain_id, domain: domain_id.domain(), tasks })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskManifestEntry {
    pub task_id: String,
    pub spec: TaskSpec,
    pub file: String,
    pub oracle_plan_length: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskManifest {
    pub domain: DomainId,
    pub domain_file: String,
    pub tasks: Vec<TaskManifestEntry>,
}

#[derive(Debug, Error)]
pub enum TaskIoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Pddl { path: PathBuf, source: PddlError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TaskIoError + '_ {
    move |source| TaskIoError::Io { path: path.to_path_buf(), source }
}

/// Writes `domain.pddl`, one `task-<id>.pddl` per task and `taskset.json`.
pub fn write_taskset(set: &TaskSet, oracle_lengths: &[Option<usize>], dir: &Path) -> Result<TaskManifest, TaskIoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let domain_path = dir.join("domain.pddl");
    fs::write(&domain_path, pddl::print_domain(&set.domain)).map_err(io_err(&domain_path))?;
    let mut entries = Vec::with_capacity(set.len());
    for (i, task) in set.tasks.iter().enumerate() {
        let file = format!("task-{}.pddl", task.task_id);
        let path = dir.join(&file);
        fs::write(&path, pddl::print_problem(&task.problem)).map_err(io_err(&path))?;
        entries.push(TaskManifestEntry {
            task_id: task.task_id.clone(),
            spec: task.spec.clone(),
            file,
            oracle_plan_length: oracle_lengths.get(i).copied().flatten(),
        });
    }
    let manifest = TaskManifest { domain: set.domain_id, domain_file: "domain.pddl".into(), tasks: entries };
    let path = dir.join("taskset.json");
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|source| TaskIoError::Json { path: path.clone(), source })?;
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    Ok(manifest)
}

/// Loads a task set written by [`write_taskset`].
pub fn read_taskset(dir: &Path) -> Result<(TaskSet, TaskManifest), TaskIoError> {
    let path = dir.join("taskset.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: TaskManifest =
        serde_json::from_str(&text).map_err(|source| TaskIoError::Json { path: path.clone(), source })?;
    let dpath = dir.join(&manifest.domain_file);
    let dtext = fs::read_to_string(&dpath).map_err(io_err(&dpath))?;
    let domain = pddl::parse_domain(&dtext).map_err(|source| TaskIoError::Pddl { path: dpath.clone(), source })?;
    let mut tasks = Vec::with_capacity(manifest.tasks.len());
    for e in &manifest.tasks {
        let p = dir.join(&e.file);
        let text = fs::read_to_string(&p).map_err(io_err(&p))?;
        let problem =
            pddl::parse_problem(&text, &domain).map_err(|source| TaskIoError::Pddl { path: p.clone(), source })?;
        tasks.push(Task { task_id: e.task_id.clone(), spec: e.spec.clone(), problem });
    }
    Ok((TaskSet { domain_id: manifest.domain, domain, tasks }, manifest))
}

/// Node budget for [`reference_plan`]; past it the reverse-play witness is used.
pub const REFERENCE_NODE_BUDGET: usize = 20_000;

/// A known-valid plan for a generated task. Same as [`solve`] except that
/// Sokoban falls back to the generator's witness when the search budget runs
/// out, so larger instances still get a plan.
pub fn reference_plan(domain_id: DomainId, task: &Task) -> Result<Plan, OracleFailure> {
    if domain_id != DomainId::Sokoban {
        return solve(domain_id, &task.problem);
    }
    solve_sokoban_bfs(&task.problem, REFERENCE_NODE_BUDGET).or_else(|e| {
        gen_sokoban(&task.spec)
            .ok()
            .filter(|i| i.problem.init == task.problem.init && i.problem.goal_pos == task.problem.goal_pos)
            .map(|i| i.witness)
            .ok_or(OracleFailure::Budget(e))
    })
}

/// Reference plans for every task, computed in parallel.
pub fn oracle_plans(set: &TaskSet, exec: Execution) -> Vec<Result<Plan, OracleFailure>> {
    par::map(exec, &set.tasks, |t| reference_plan(set.domain_id, t))
}

#[cfg(test)]
mod tests;
