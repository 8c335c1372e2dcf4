//! The outer loop: deploy the current policy on every task, validate and
//! store the traces, curate a training set, advance the policy, repeat.
//!
//! Layout under `output_root/<domain>/`:
//! `tasks/` (the task set), `traces/gen-NNN/run-R.jsonl` plus
//! `traces/gen-NNN/record.json` once a generation is complete,
//! `sft/gen-NNN/run-R/` (the data that trains generation NNN), and the
//! metrics files. A generation without `record.json` is redone from
//! whatever its trace files already hold.

mod config;
mod metrics;
mod store;

pub use config::{CurationMode, PolicySelection, RunConfig};
pub use metrics::{
    generation_metrics, mean_sd, plan_length_histogram, solved_count, solved_tasks, token_stats, unanimous_at_k,
    GenerationMetrics, MeanSd, MetricsReport, TokenStats,
};
pub use store::{TraceRecord, TraceStore, TraceWriter};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curation::{self, ExportError, SftSource, TrainingSet, UncuratedSample};
use crate::generators::{self, DomainId, GenError, TaskIoError, TaskSet};
use crate::par::{self, Execution};
use crate::policy::{
    build_prompt, ExampleBank, GenerationRequest, HttpConfig, HttpPolicy, PolicyPort, Prompt, SamplingParams,
    SimulatedPolicy, Trace,
};
use crate::seed;
use crate::validator::{extract_plan, validate};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error(transparent)]
    Tasks(#[from] TaskIoError),
    #[error(transparent)]
    Export(#[from] ExportError),
}

impl PipelineError {
    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
        move |source| PipelineError::Io { path: path.to_path_buf(), source }
    }
}

/// What one run's policy looked like during a generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: u32,
    pub trace_file: String,
    pub traces: usize,
    pub solved: usize,
    pub skill: Option<f64>,
    pub model_ref: Option<String>,
    /// Size of the training set aggregated after this generation.
    pub training_set_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u32,
    pub runs: Vec<RunRecord>,
}

/// Policy state for one run: its skill (simulated) or model (HTTP).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolicyState {
    pub skill: Option<f64>,
    pub model_ref: Option<String>,
}

/// Seed of one rollout; independent of scheduling order.
pub fn trace_seed(master: u64, generation: u32, run: u32, task_id: &str, sample: u32) -> u64 {
    seed::derive_path(master, &[u64::from(generation), u64::from(run), seed::hash_str(task_id), u64::from(sample)])
}

/// Validates a trace's plan, if one can be extracted.
pub fn judge(trace: Trace, taskset: &TaskSet) -> TraceRecord {
    let verdict = taskset.get(&trace.task_id).and_then(|task| {
        extract_plan(&trace.raw_text).ok().map(|plan| validate(&taskset.domain, &task.problem, &plan))
    });
    let plan_length = verdict.as_ref().and_then(|v| v.plan_length());
    TraceRecord { trace, verdict, plan_length }
}

/// Everything a generation's rollouts need besides the policies.
pub struct Deployment<'a> {
    pub taskset: &'a TaskSet,
    pub prompts: &'a [Prompt],
    pub params: &'a SamplingParams,
    pub seed: u64,
    pub samples_per_task: u32,
    pub chunk_size: usize,
    pub exec: Execution,
}

impl Deployment<'_> {
    fn work(&self) -> Vec<(usize, u32)> {
        (0..self.taskset.len()).flat_map(|i| (0..self.samples_per_task).map(move |s| (i, s))).collect()
    }
}

/// Deploys `policies[r]` for run `r` on every task and persists the traces.
/// Traces already on disk for this generation are kept and their rollouts
/// skipped, so an interrupted generation picks up where it stopped.
pub fn run_generation(
    dep: &Deployment<'_>,
    policies: &[&dyn PolicyPort],
    states: &[PolicyState],
    store: &TraceStore,
    generation: u32,
) -> Result<(GenerationRecord, Vec<Vec<TraceRecord>>), PipelineError> {
    let work = dep.work();
    let mut runs = Vec::with_capacity(policies.len());
    let mut all = Vec::with_capacity(policies.len());
    for (r, policy) in policies.iter().enumerate() {
        let run = r as u32;
        let mut records = store.load(generation, run)?;
        if records.len() > work.len() {
            return Err(PipelineError::Corrupt(format!(
                "{} holds {} traces, expected at most {}",
                store.path(generation, run).display(),
                records.len(),
                work.len()
            )));
        }
        for (rec, &(i, _)) in records.iter().zip(&work) {
            if rec.trace.task_id != dep.taskset.tasks[i].task_id {
                return Err(PipelineError::Corrupt(format!(
                    "{}: found {} where {} was expected",
                    store.path(generation, run).display(),
                    rec.trace.task_id,
                    dep.taskset.tasks[i].task_id
                )));
            }
        }
        let mut writer = store.writer(generation, run)?;
        for chunk in work[records.len()..].chunks(dep.chunk_size) {
            let fresh = par::map(dep.exec, chunk, |&(i, sample)| {
                let task = &dep.taskset.tasks[i];
                let req = GenerationRequest {
                    task_id: &task.task_id,
                    generation,
                    run,
                    prompt: &dep.prompts[i],
                    params: dep.params,
                    seed: trace_seed(dep.seed, generation, run, &task.task_id, sample),
                };
                judge(policy.generate(&req), dep.taskset)
            });
            for rec in &fresh {
                writer.append(rec)?;
            }
            writer.flush()?;
            records.extend(fresh);
        }
        let state = states.get(r).cloned().unwrap_or_default();
        runs.push(RunRecord {
            run,
            trace_file: store
                .path(generation, run)
                .strip_prefix(store.root())
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            traces: records.len(),
            solved: solved_count(&records),
            skill: state.skill,
            model_ref: state.model_ref,
            training_set_size: None,
        });
        all.push(records);
    }
    Ok((GenerationRecord { generation, runs }, all))
}

/// Result of [`run_iterative`]: metrics for every completed generation, and
/// for HTTP runs the generations still waiting on a fine-tuned model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub awaiting: Vec<AwaitingModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AwaitingModel {
    pub domain: DomainId,
    pub generation: u32,
    pub run: u32,
    /// Training data for the missing model.
    pub sft_dir: PathBuf,
    /// Write the model name here (or add it to `model_refs`) and rerun.
    pub model_ref_file: PathBuf,
}

enum Policies {
    Simulated(Vec<SimulatedPolicy>),
    Http(HttpConfig, Vec<Option<HttpPolicy>>),
}

fn load_or_generate_tasks(
    config: &RunConfig,
    domain: DomainId,
    dir: &Path,
    exec: Execution,
) -> Result<TaskSet, PipelineError> {
    if dir.join("taskset.json").exists() {
        let (set, _) = generators::read_taskset(dir)?;
        if set.len() != config.task_count || set.domain_id != domain {
            return Err(PipelineError::Config(format!(
                "{} holds {} {} tasks but the config asks for {} {} tasks",
                dir.display(),
                set.len(),
                set.domain_id,
                config.task_count,
                domain
            )));
        }
        return Ok(set);
    }
    let task_seed = seed::derive(config.seed, seed::hash_str(domain.name()));
    let set = generators::gen_taskset_with(domain, config.task_count, task_seed, &config.aux_params, exec)?;
    let lengths: Vec<Option<usize>> =
        generators::oracle_plans(&set, exec).into_iter().map(|p| p.ok().map(|p| p.len())).collect();
    generators::write_taskset(&set, &lengths, dir)?;
    // reload so the in-memory set is exactly what later resumes will see
    Ok(generators::read_taskset(dir)?.0)
}

fn read_record(path: &Path) -> Result<Option<GenerationRecord>, PipelineError> {
    match fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| PipelineError::Corrupt(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(PipelineError::io(path)(e)),
    }
}

fn model_ref_file(root: &Path, generation: u32, run: Option<u32>) -> PathBuf {
    match run {
        Some(r) => root.join(format!("model-ref-gen-{generation:03}-run-{r}.txt")),
        None => root.join(format!("model-ref-gen-{generation:03}.txt")),
    }
}

fn lookup_model_ref(config: &RunConfig, base: &HttpConfig, root: &Path, generation: u32, run: u32) -> Option<String> {
    if generation == 0 {
        return Some(config.model_refs.first().cloned().unwrap_or_else(|| base.model.clone()));
    }
    let from_file = |p: PathBuf| fs::read_to_string(p).ok().map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
    from_file(model_ref_file(root, generation, Some(run)))
        .or_else(|| from_file(model_ref_file(root, generation, None)))
        .or_else(|| config.model_refs.get(generation as usize).cloned())
}

/// Which runs' traces train run `r`'s policy.
fn training_runs(config: &RunConfig, r: usize) -> std::ops::Range<usize> {
    if config.shared_runs {
        0..config.runs as usize
    } else {
        r..r + 1
    }
}

enum Curated {
    Set(TrainingSet),
    Uncurated(Vec<UncuratedSample>),
}

impl Curated {
    fn size(&self) -> usize {
        match self {
            Curated::Set(s) => s.len(),
            Curated::Uncurated(v) => v.len(),
        }
    }

    fn source(&self) -> SftSource<'_> {
        match self {
            Curated::Set(s) => SftSource::Curated(s),
            Curated::Uncurated(v) => SftSource::Uncurated(v),
        }
    }
}

/// Training data for the next generation of run `r`, from all traces of
/// generations `0..=last`.
fn curate(
    config: &RunConfig,
    taskset: &TaskSet,
    history: &[Vec<Vec<TraceRecord>>],
    r: usize,
    exec: Execution,
) -> Curated {
    let by_gen: Vec<Vec<Trace>> = history
        .iter()
        .map(|runs| training_runs(config, r).flat_map(|i| runs[i].iter().map(|rec| rec.trace.clone())).collect())
        .collect();
    match config.curation {
        CurationMode::Curated => {
            let valid: Vec<_> = by_gen.iter().map(|t| curation::filter_valid_with(t, taskset, exec)).collect();
            Curated::Set(curation::aggregate(&valid))
        }
        CurationMode::Uncurated => Curated::Uncurated(curation::aggregate_uncurated(&by_gen, taskset)),
    }
}

fn run_domain(config: &RunConfig, domain: DomainId, outcome: &mut RunOutcome) -> Result<(), PipelineError> {
    let exec = Execution::Parallel;
    let root = config.domain_root(domain);
    let taskset = load_or_generate_tasks(config, domain, &root.join("tasks"), exec)?;
    let bank = ExampleBank::standard();
    let prompts: Vec<Prompt> = taskset.tasks.iter().map(|t| build_prompt(&taskset.domain, &t.problem, &bank)).collect();
    let store = TraceStore::new(root.join("traces"));
    let k = config.runs as usize;
    let mut policies = match &config.policy {
        PolicySelection::Simulated(sim) => {
            let base = SimulatedPolicy::new(&taskset, sim.clone(), exec);
            Policies::Simulated(vec![base; k])
        }
        PolicySelection::Http(http) => Policies::Http(http.clone(), (0..k).map(|_| None).collect()),
    };
    let dep = Deployment {
        taskset: &taskset,
        prompts: &prompts,
        params: &config.sampling,
        seed: config.seed,
        samples_per_task: config.samples_per_task,
        chunk_size: config.chunk_size,
        exec,
    };
    let mut history: Vec<Vec<Vec<TraceRecord>>> = Vec::new();
    let mut metrics = Vec::new();

    for generation in 0..=config.n_generations {
        let record_path = store.generation_dir(generation).join("record.json");
        if read_record(&record_path)?.is_some() {
            let mut runs = Vec::with_capacity(k);
            for r in 0..k {
                let recs = store.load(generation, r as u32)?;
                if recs.len() != taskset.len() * config.samples_per_task as usize {
                    return Err(PipelineError::Corrupt(format!(
                        "{} is marked complete but holds {} traces",
                        store.path(generation, r as u32).display(),
                        recs.len()
                    )));
                }
                runs.push(recs);
            }
            metrics.push(generation_metrics(generation, &runs));
            history.push(runs);
            continue;
        }

        // advance each run's policy on everything before this generation;
        // skills are a pure function of the history, so completed
        // generations above need no policy at all
        let mut states = vec![PolicyState::default(); k];
        match &mut policies {
            Policies::Simulated(ps) => {
                for (r, p) in ps.iter_mut().enumerate() {
                    if !history.is_empty() {
                        match curate(config, &taskset, &history, r, exec) {
                            Curated::Set(s) => p.set_skill(&s),
                            Curated::Uncurated(v) => p.set_skill_uncurated(&v),
                        }
                    }
                    states[r].skill = Some(p.skill());
                }
            }
            Policies::Http(base, ps) => {
                let mut waiting = false;
                for r in 0..k {
                    match lookup_model_ref(config, base, &root, generation, r as u32) {
                        Some(m) => {
                            let mut cfg = base.clone();
                            cfg.model = m.clone();
                            ps[r] = Some(HttpPolicy::new(cfg));
                            states[r].model_ref = Some(m);
                        }
                        None => {
                            waiting = true;
                            outcome.awaiting.push(AwaitingModel {
                                domain,
                                generation,
                                run: r as u32,
                                sft_dir: root
                                    .join("sft")
                                    .join(store::gen_dir_name(generation))
                                    .join(format!("run-{r}")),
                                model_ref_file: model_ref_file(&root, generation, Some(r as u32)),
                            });
                        }
                    }
                }
                if waiting {
                    break;
                }
            }
        }

        let refs: Vec<&dyn PolicyPort> = match &policies {
            Policies::Simulated(ps) => ps.iter().map(|p| p as &dyn PolicyPort).collect(),
            Policies::Http(_, ps) => {
                ps.iter().map(|p| p.as_ref().expect("model resolved above") as &dyn PolicyPort).collect()
            }
        };
        let (mut record, runs) =
            par::with_parallelism(config.parallelism, || run_generation(&dep, &refs, &states, &store, generation))?;
        metrics.push(generation_metrics(generation, &runs));
        history.push(runs);

        // training data for the next generation, exported before the
        // record marks this one complete
        let next = generation + 1;
        for r in 0..k {
            let data = curate(config, &taskset, &history, r, exec);
            let dir = root.join("sft").join(store::gen_dir_name(next)).join(format!("run-{r}"));
            curation::export_sft(data.source(), &taskset, &bank, &config.hyperparameters, &dir)?;
            record.runs[r].training_set_size = Some(data.size());
        }
        let json = serde_json::to_string_pretty(&record).expect("record serializes");
        fs::write(&record_path, json + "\n").map_err(PipelineError::io(&record_path))?;
    }

    outcome.report.domains.insert(domain, metrics);
    let mut single = MetricsReport::default();
    single.domains.insert(domain, outcome.report.domains[&domain].clone());
    single.write(&root)
}

/// Runs (or resumes) the full loop for every configured domain and writes
/// `metrics.json` / `metrics.csv` at the output root and per domain.
pub fn run_iterative(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    config.check()?;
    fs::create_dir_all(&config.output_root).map_err(PipelineError::io(&config.output_root))?;
    let cfg_path = config.output_root.join("config.json");
    let json = serde_json::to_string_pretty(config).expect("config serializes");
    fs::write(&cfg_path, json + "\n").map_err(PipelineError::io(&cfg_path))?;
    let mut outcome = RunOutcome::default();
    for &domain in &config.domains {
        run_domain(config, domain, &mut outcome)?;
    }
    outcome.report.write(&config.output_root)?;
    Ok(outcome)
}

/// Recomputes metrics from the completed generations stored under `root`,
/// which may be an output root or a single domain directory.
pub fn metrics_from_store(root: &Path) -> Result<MetricsReport, PipelineError> {
    let mut report = MetricsReport::default();
    let candidates: Vec<(DomainId, PathBuf)> = DomainId::ALL
        .iter()
        .map(|&d| (d, root.join(d.name())))
        .chain(
            root.file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.parse::<DomainId>().ok())
                .map(|d| (d, root.to_path_buf())),
        )
        .filter(|(_, p)| p.join("traces").is_dir())
        .collect();
    for (domain, dir) in candidates {
        let store = TraceStore::new(dir.join("traces"));
        let mut gens = Vec::new();
        for generation in 0.. {
            let Some(record) = read_record(&store.generation_dir(generation).join("record.json"))? else { break };
            let runs = record.runs.iter().map(|r| store.load(generation, r.run)).collect::<Result<Vec<_>, _>>()?;
            gens.push(generation_metrics(generation, &runs));
        }
        report.domains.insert(domain, gens);
    }
    Ok(report)
}

#[cfg(test)]
mod tests;
