//! Prompt construction and the policies that answer prompts: a remote
//! chat-completions server, or a simulated stand-in for offline runs.

mod http;
mod prompt;
mod simulated;
mod trace;

pub use http::{HttpConfig, HttpPolicy, API_KEY_ENV};
pub use prompt::{build_prompt, Example, ExampleBank, Prompt, INSTRUCTION};
pub use simulated::{SimConfig, SimulatedPolicy};
pub use trace::{count_reasoning_tokens, FinishReason, Trace, Usage};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub temperature: f64,
    pub max_tokens: u64,
    /// Model name sent to the server; for simulated runs just a label.
    pub model_ref: Option<String>,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self { temperature: 0.6, max_tokens: 32_768, model_ref: None }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub task_id: &'a str,
    pub generation: u32,
    pub run: u32,
    pub prompt: &'a Prompt,
    pub params: &'a SamplingParams,
    pub seed: u64,
}

/// Anything that turns a prompt into a trace. Implementations must not
/// panic on bad responses; failures are reported through
/// [`FinishReason::Error`].
pub trait PolicyPort: Send + Sync {
    fn generate(&self, req: &GenerationRequest<'_>) -> Trace;
}
