//! Locating the plan inside free-form model output.

use thiserror::Error;

use super::plan::{is_step_line, parse_plan, Plan};

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no plan found in trace")]
pub struct NoPlanFound;

/// Splits raw output into `(reasoning, answer)`.
///
/// With a closed `<think>...</think>` segment the answer is everything after
/// the last closing tag. An opening tag that is never closed means the model
/// was cut off mid-reasoning, so the answer is empty.
pub fn split_reasoning(raw: &str) -> (&str, &str) {
    if let Some(close) = raw.rfind(THINK_CLOSE) {
        let head = &raw[..close];
        let start = head.find(THINK_OPEN).map_or(0, |i| i + THINK_OPEN.len());
        return (head[start..].trim(), &raw[close + THINK_CLOSE.len()..]);
    }
    if let Some(open) = raw.find(THINK_OPEN) {
        return (raw[open + THINK_OPEN.len()..].trim(), "");
    }
    ("", raw)
}

/// Contents of the last complete ``` fenced block, if any.
fn last_fenced_block(text: &str) -> Option<&str> {
    let mut fences = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            fences.push((offset, offset + line.len()));
        }
        offset += line.len();
    }
    // pair fences in order: (0,1), (2,3), ...
    let pairs = fences.len() / 2;
    if pairs == 0 {
        return None;
    }
    let open = fences[2 * (pairs - 1)];
    let close = fences[2 * (pairs - 1) + 1];
    Some(&text[open.1..close.0])
}

/// Last maximal run of consecutive lines that each look like a plan step.
fn last_step_run(text: &str) -> Option<String> {
    let lines: Vec<&str> = text.lines().collect();
    let mut end = lines.len();
    while end > 0 && !is_step_line(lines[end - 1]) {
        end -= 1;
    }
    if end == 0 {
        return None;
    }
    let mut start = end;
    while start > 0 && is_step_line(lines[start - 1]) {
        start -= 1;
    }
    Some(lines[start..end].join("\n"))
}

/// Extracts the plan from a raw trace: the reasoning segment is discarded,
/// then the last fenced code block is tried, then the last run of step lines.
pub fn extract_plan(raw: &str) -> Result<Plan, NoPlanFound> {
    let (_, answer) = split_reasoning(raw);
    extract_region(answer).and_then(|region| parse_plan(&region).ok()).ok_or(NoPlanFound)
}

/// The text region a plan would be parsed from, if any.
pub fn extract_region(answer: &str) -> Option<String> {
    if let Some(block) = last_fenced_block(answer) {
        if parse_plan(block).is_ok() {
            return Some(block.trim().to_string());
        }
    }
    last_step_run(answer)
}
