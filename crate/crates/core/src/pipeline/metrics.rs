use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::store::TraceRecord;
use super::PipelineError;
use crate::generators::DomainId;
use crate::policy::FinishReason;

/// Distinct tasks with at least one valid trace.
pub fn solved_tasks(records: &[TraceRecord]) -> BTreeSet<&str> {
    records.iter().filter(|r| r.is_valid()).map(|r| r.trace.task_id.as_str()).collect()
}

pub fn solved_count(records: &[TraceRecord]) -> usize {
    solved_tasks(records).len()
}

/// Tasks solved by every run.
pub fn unanimous_at_k(runs: &[Vec<TraceRecord>]) -> usize {
    let mut sets = runs.iter().map(|r| solved_tasks(r));
    let Some(first) = sets.next() else { return 0 };
    sets.fold(first, |acc, s| acc.intersection(&s).copied().collect()).len()
}

/// Plan length to number of valid traces with that length.
pub fn plan_length_histogram<'a>(records: impl IntoIterator<Item = &'a TraceRecord>) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for r in records.into_iter().filter(|r| r.is_valid()) {
        if let Some(len) = r.plan_length {
            *h.entry(len).or_insert(0) += 1;
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_sd(values: &[f64]) -> MeanSd {
    let n = values.len();
    if n == 0 {
        return MeanSd { mean: 0.0, sd: 0.0, n };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n < 2 { 0.0 } else { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() };
    MeanSd { mean, sd, n }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenStats {
    /// Over valid and invalid traces alike; transport errors are left out.
    pub all: MeanSd,
    pub valid: MeanSd,
}

pub fn token_stats<'a>(records: impl IntoIterator<Item = &'a TraceRecord>) -> TokenStats {
    let mut all = Vec::new();
    let mut valid = Vec::new();
    for r in records {
        if r.trace.finish_reason == FinishReason::Error {
            continue;
        }
        let t = r.trace.reasoning_tokens as f64;
        all.push(t);
        if r.is_valid() {
            valid.push(t);
        }
    }
    TokenStats { all: mean_sd(&all), valid: mean_sd(&valid) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMetrics {
    pub generation: u32,
    pub solved_per_run: Vec<usize>,
    pub solved: MeanSd,
    pub unanimous: usize,
    pub plan_length_histogram: BTreeMap<usize, usize>,
    pub reasoning_tokens: TokenStats,
    pub traces: usize,
}

pub fn generation_metrics(generation: u32, runs: &[Vec<TraceRecord>]) -> GenerationMetrics {
    let solved_per_run: Vec<usize> = runs.iter().map(|r| solved_count(r)).collect();
    let as_f64: Vec<f64> = solved_per_run.iter().map(|&s| s as f64).collect();
    GenerationMetrics {
        generation,
        solved: mean_sd(&as_f64),
        solved_per_run,
        unanimous: unanimous_at_k(runs),
        plan_length_histogram: plan_length_histogram(runs.iter().flatten()),
        reasoning_tokens: token_stats(runs.iter().flatten()),
        traces: runs.iter().map(Vec::len).sum(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub domains: BTreeMap<DomainId, Vec<GenerationMetrics>>,
}

impl MetricsReport {
    pub fn generation(&self, domain: DomainId, generation: u32) -> Option<&GenerationMetrics> {
        self.domains.get(&domain)?.iter().find(|g| g.generation == generation)
    }

    /// Writes `metrics.json`, `metrics.csv` (one row per domain and
    /// generation) and `plan_lengths.csv`.
    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
        let path = dir.join("metrics.json");
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(&path, json + "\n").map_err(PipelineError::io(&path))?;

        let csv_err = |path: &Path| {
            let path = path.to_path_buf();
            move |e: csv::Error| PipelineError::Corrupt(format!("{}: {e}", path.display()))
        };
        let path = dir.join("metrics.csv");
        let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
        w.write_record([
            "domain",
            "generation",
            "solved_mean",
            "solved_sd",
            "solved_per_run",
            "unanimous",
            "tokens_mean",
            "tokens_sd",
            "tokens_valid_mean",
            "traces",
        ])
        .map_err(csv_err(&path))?;
        for (d, gens) in &self.domains {
            for g in gens {
                let per_run: Vec<String> = g.solved_per_run.iter().map(ToString::to_string).collect();
                w.write_record([
                    d.name().to_string(),
                    g.generation.to_string(),
                    format!("{:.3}", g.solved.mean),
                    format!("{:.3}", g.solved.sd),
                    per_run.join(";"),
                    g.unanimous.to_string(),
                    format!("{:.3}", g.reasoning_tokens.all.mean),
                    format!("{:.3}", g.reasoning_tokens.all.sd),
                    format!("{:.3}", g.reasoning_tokens.valid.mean),
                    g.traces.to_string(),
                ])
                .map_err(csv_err(&path))?;
            }
        }
        w.flush().map_err(PipelineError::io(&path))?;

        let path = dir.join("plan_lengths.csv");
        let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
        w.write_record(["domain", "generation", "plan_length", "count"]).map_err(csv_err(&path))?;
        for (d, gens) in &self.domains {
            for g in gens {
                for (len, count) in &g.plan_length_histogram {
                    w.write_record([
                        d.name().to_string(),
                        g.generation.to_string(),
                        len.to_string(),
                        count.to_string(),
                    ])
                    .map_err(csv_err(&path))?;
                }
            }
        }
        w.flush().map_err(PipelineError::io(&path))
    }
}
