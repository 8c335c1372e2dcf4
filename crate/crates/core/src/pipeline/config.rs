use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::curation::Hyperparameters;
use crate::generators::DomainId;
use crate::policy::{HttpConfig, SamplingParams, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PolicySelection {
    Simulated(SimConfig),
    Http(HttpConfig),
}

impl Default for PolicySelection {
    fn default() -> Self {
        PolicySelection::Simulated(SimConfig::default())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurationMode {
    #[default]
    Curated,
    Uncurated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub domains: Vec<DomainId>,
    pub task_count: usize,
    /// Generations 0 through `n_generations` are deployed.
    pub n_generations: u32,
    /// Independent runs per generation.
    pub runs: u32,
    pub samples_per_task: u32,
    /// Pool all runs into one training set and one policy instead of
    /// running fully independent pipelines.
    pub shared_runs: bool,
    pub sampling: SamplingParams,
    pub policy: PolicySelection,
    pub curation: CurationMode,
    pub seed: u64,
    /// Worker threads for rollouts; 0 uses every core.
    pub parallelism: usize,
    /// Rollouts evaluated between in-order flushes to the trace store.
    pub chunk_size: usize,
    pub output_root: PathBuf,
    /// Generator knobs, see `generators`.
    pub aux_params: BTreeMap<String, f64>,
    pub hyperparameters: Hyperparameters,
    /// HTTP mode: model name per generation index. Missing entries are read
    /// from `model-ref-gen-NNN[-run-R].txt` in the domain directory.
    pub model_refs: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domains: vec![DomainId::Blocksworld],
            task_count: 200,
            n_generations: 5,
            runs: 3,
            samples_per_task: 1,
            shared_runs: false,
            sampling: SamplingParams::default(),
            policy: PolicySelection::default(),
            curation: CurationMode::Curated,
            seed: 0,
            parallelism: 0,
            chunk_size: 64,
            output_root: PathBuf::from("plancycle-out"),
            aux_params: BTreeMap::new(),
            hyperparameters: Hyperparameters::default(),
            model_refs: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(PipelineError::io(path))?;
        let config: RunConfig =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        config.check()?;
        Ok(config)
    }

    pub fn check(&self) -> Result<(), PipelineError> {
        let fail = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.domains.is_empty() {
            return fail("at least one domain is required");
        }
        if self.runs == 0 {
            return fail("runs must be at least 1");
        }
        if self.n_generations == 0 {
            return fail("n_generations must be at least 1");
        }
        if self.task_count == 0 {
            return fail("task_count must be at least 1");
        }
        if self.samples_per_task == 0 {
            return fail("samples_per_task must be at least 1");
        }
        if self.chunk_size == 0 {
            return fail("chunk_size must be at least 1");
        }
        Ok(())
    }

    pub fn domain_root(&self, domain: DomainId) -> PathBuf {
        self.output_root.join(domain.name())
    }
}
