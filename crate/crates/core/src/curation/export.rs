use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{TrainingSet, UncuratedSample};
use crate::generators::TaskSet;
use crate::policy::{build_prompt, ExampleBank, Trace};

/// LoRA fine-tuning settings handed to the external trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub max_context_length: u32,
    pub batch_size: u32,
    pub gradient_accumulation_steps: u32,
    pub epochs: u32,
    pub optimizer: String,
    pub learning_rate: f64,
    pub lr_scheduler: String,
    pub warmup_ratio: f64,
    pub weight_decay: f64,
    pub max_grad_norm: f64,
    pub lora_rank: u32,
    pub lora_alpha: u32,
    pub lora_dropout: f64,
    pub lora_bias: String,
    pub validation_split: f64,
    pub eval_every_steps: u32,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            max_context_length: 32_768,
            batch_size: 1,
            gradient_accumulation_steps: 1,
            epochs: 2,
            optimizer: "adamw_fused".into(),
            learning_rate: 1e-5,
            lr_scheduler: "cosine".into(),
            warmup_ratio: 0.02,
            weight_decay: 0.01,
            max_grad_norm: 1.0,
            lora_rank: 16,
            lora_alpha: 32,
            lora_dropout: 0.05,
            lora_bias: "none".into(),
            validation_split: 0.1,
            eval_every_steps: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub task_id: String,
    pub prompt: String,
    pub completion: String,
    pub generation: u32,
    pub plan_length: Option<usize>,
    pub reasoning_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftManifest {
    pub mode: String,
    pub samples: usize,
    pub distinct_tasks: usize,
    pub source_generations: Vec<u32>,
    pub data_file: String,
    pub hyperparameters: Hyperparameters,
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("unknown task {0}")]
    UnknownTask(String),
}

/// What to export: a curated set or the uncurated sample list.
pub enum SftSource<'a> {
    Curated(&'a TrainingSet),
    Uncurated(&'a [UncuratedSample]),
}

fn record(
    trace: &Trace,
    plan_length: Option<usize>,
    taskset: &TaskSet,
    bank: &ExampleBank,
) -> Result<SftRecord, ExportError> {
    let task = taskset.get(&trace.task_id).ok_or_else(|| ExportError::UnknownTask(trace.task_id.clone()))?;
    Ok(SftRecord {
        task_id: trace.task_id.clone(),
        prompt: build_prompt(&taskset.domain, &task.problem, bank).render(),
        completion: trace.raw_text.clone(),
        generation: trace.generation,
        plan_length,
        reasoning_tokens: trace.reasoning_tokens,
    })
}

/// Writes `sft.jsonl` and `manifest.json` into `out_dir`.
pub fn export_sft(
    source: SftSource<'_>,
    taskset: &TaskSet,
    bank: &ExampleBank,
    hyper: &Hyperparameters,
    out_dir: &Path,
) -> Result<SftManifest, ExportError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExportError::Io { path, source }
    };
    let (mode, records, mut gens) = match source {
        SftSource::Curated(set) => {
            let records = set
                .entries
                .values()
                .map(|v| record(&v.trace, Some(v.plan_length), taskset, bank))
                .collect::<Result<Vec<_>, _>>()?;
            ("curated", records, set.source_generations.iter().copied().collect::<Vec<_>>())
        }
        SftSource::Uncurated(samples) => {
            let records =
                samples.iter().map(|s| record(&s.trace, None, taskset, bank)).collect::<Result<Vec<_>, _>>()?;
            let gens = samples.iter().map(|s| s.trace.generation).collect();
            ("uncurated", records, gens)
        }
    };
    gens.sort_unstable();
    gens.dedup();

    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let data = out_dir.join("sft.jsonl");
    let file = fs::File::create(&data).map_err(io_err(&data))?;
    let mut w = BufWriter::new(file);
    for r in &records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(w, "{line}").map_err(io_err(&data))?;
    }
    w.flush().map_err(io_err(&data))?;

    let mut tasks: Vec<&str> = records.iter().map(|r| r.task_id.as_str()).collect();
    tasks.sort_unstable();
    tasks.dedup();
    let manifest = SftManifest {
        mode: mode.into(),
        samples: records.len(),
        distinct_tasks: tasks.len(),
        source_generations: gens,
        data_file: "sft.jsonl".into(),
        hyperparameters: hyper.clone(),
    };
    let path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    Ok(manifest)
}
