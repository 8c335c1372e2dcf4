use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::policy::{FinishReason, Trace};
use crate::validator::Verdict;

/// A trace as persisted, with its validation outcome. `verdict` is absent
/// when no plan could be extracted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    #[serde(flatten)]
    pub trace: Trace,
    pub verdict: Option<Verdict>,
    pub plan_length: Option<usize>,
}

impl TraceRecord {
    /// Counts as solved: a validated plan from a trace that finished normally.
    pub fn is_valid(&self) -> bool {
        self.trace.finish_reason == FinishReason::Stop && self.verdict.as_ref().is_some_and(Verdict::is_valid)
    }
}

/// Append-only JSONL files, one per (generation, run), under
/// `<root>/gen-NNN/run-R.jsonl`.
#[derive(Debug, Clone)]
pub struct TraceStore {
    root: PathBuf,
}

pub(crate) fn gen_dir_name(generation: u32) -> String {
    format!("gen-{generation:03}")
}

impl TraceStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn generation_dir(&self, generation: u32) -> PathBuf {
        self.root.join(gen_dir_name(generation))
    }

    pub fn path(&self, generation: u32, run: u32) -> PathBuf {
        self.generation_dir(generation).join(format!("run-{run}.jsonl"))
    }

    /// Complete records in file order. A final line without its newline is a
    /// write cut short by a crash and is ignored; any other unreadable line
    /// is an error.
    pub fn load(&self, generation: u32, run: u32) -> Result<Vec<TraceRecord>, PipelineError> {
        let path = self.path(generation, run);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(PipelineError::io(&path)(e)),
        };
        let complete = &text[..text.rfind('\n').map_or(0, |i| i + 1)];
        complete
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map_err(|e| PipelineError::Corrupt(format!("{}:{}: {e}", path.display(), i + 1)))
            })
            .collect()
    }

    /// Opens the file for appending, first cutting off any partial last line.
    pub fn writer(&self, generation: u32, run: u32) -> Result<TraceWriter, PipelineError> {
        let path = self.path(generation, run);
        let dir = self.generation_dir(generation);
        fs::create_dir_all(&dir).map_err(PipelineError::io(&dir))?;
        if let Ok(text) = fs::read(&path) {
            let keep = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            if keep < text.len() {
                let f = OpenOptions::new().write(true).open(&path).map_err(PipelineError::io(&path))?;
                f.set_len(keep as u64).map_err(PipelineError::io(&path))?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(PipelineError::io(&path))?;
        Ok(TraceWriter { out: BufWriter::new(file), path })
    }
}

pub struct TraceWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl TraceWriter {
    pub fn append(&mut self, record: &TraceRecord) -> Result<(), PipelineError> {
        let mut line = serde_json::to_string(record).expect("records serialize");
        line.push('\n');
        self.out.write_all(line.as_bytes()).map_err(PipelineError::io(&self.path))
    }

    /// Pushes buffered records to the OS.
    pub fn flush(&mut self) -> Result<(), PipelineError> {
        self.out.flush().map_err(PipelineError::io(&self.path))
    }
}
