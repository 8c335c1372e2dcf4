use serde::{Deserialize, Serialize};

use crate::validator::{extract_region, split_reasoning};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    /// Hit the token limit; such traces never enter a training set.
    Length,
    Error,
}

/// One model response to one task prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub task_id: String,
    #[serde(rename = "gen")]
    pub generation: u32,
    pub run: u32,
    pub raw_text: String,
    pub plan_text: Option<String>,
    pub reasoning_tokens: u64,
    pub total_tokens: u64,
    pub finish_reason: FinishReason,
    pub wall_time_ms: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Token usage as reported by a server, when it reports any.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Usage {
    pub completion_tokens: Option<u64>,
    pub reasoning_tokens: Option<u64>,
}

fn whitespace_tokens(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

/// Reported reasoning tokens if present, otherwise whitespace-delimited
/// tokens of the reasoning segment.
pub fn count_reasoning_tokens(raw: &str, usage: Usage) -> u64 {
    usage.reasoning_tokens.unwrap_or_else(|| whitespace_tokens(split_reasoning(raw).0))
}

impl Trace {
    /// Fills the derived fields (plan region, token counts) from `raw_text`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_raw(
        task_id: &str,
        generation: u32,
        run: u32,
        raw_text: String,
        finish_reason: FinishReason,
        usage: Usage,
        wall_time_ms: u64,
        seed: u64,
    ) -> Self {
        let total = usage.completion_tokens.unwrap_or_else(|| whitespace_tokens(&raw_text));
        let reasoning = count_reasoning_tokens(&raw_text, usage).min(total);
        let plan_text = extract_region(split_reasoning(&raw_text).1);
        Self {
            task_id: task_id.to_string(),
            generation,
            run,
            raw_text,
            plan_text,
            reasoning_tokens: reasoning,
            total_tokens: total,
            finish_reason,
            wall_time_ms,
            seed,
            error: None,
        }
    }

    pub fn failed(task_id: &str, generation: u32, run: u32, seed: u64, error: String, wall_time_ms: u64) -> Self {
        Self {
            task_id: task_id.to_string(),
            generation,
            run,
            raw_text: String::new(),
            plan_text: None,
            reasoning_tokens: 0,
            total_tokens: 0,
            finish_reason: FinishReason::Error,
            wall_time_ms,
            seed,
            error: Some(error),
        }
    }

    pub fn reasoning_text(&self) -> &str {
        split_reasoning(&self.raw_text).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_region() {
        let t = Trace::from_raw(
            "t",
            0,
            0,
            "<think>a b c</think>\n(x y)\n".into(),
            FinishReason::Stop,
            Usage::default(),
            0,
            1,
        );
        assert_eq!(t.reasoning_tokens, 3);
        assert_eq!(t.total_tokens, 5);
        assert_eq!(t.plan_text.as_deref(), Some("(x y)"));
        assert_eq!(t.reasoning_text(), "a b c");
    }

    #[test]
    fn reported_usage_wins_but_is_capped() {
        let usage = Usage { completion_tokens: Some(10), reasoning_tokens: Some(40) };
        let t = Trace::from_raw("t", 0, 0, "<think>a</think>".into(), FinishReason::Stop, usage, 0, 1);
        assert_eq!((t.reasoning_tokens, t.total_tokens), (10, 10));
        assert_eq!(count_reasoning_tokens("<think>a b</think>", Usage::default()), 2);
    }

    #[test]
    fn json_field_names() {
        let t = Trace::failed("t", 2, 1, 9, "boom".into(), 5);
        let v: serde_json::Value = serde_json::to_value(&t).unwrap();
        assert_eq!(v["gen"], 2);
        assert_eq!(v["finish_reason"], "error");
        assert_eq!(v["plan_text"], serde_json::Value::Null);
    }
}
