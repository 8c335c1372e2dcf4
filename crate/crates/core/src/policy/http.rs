use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{FinishReason, GenerationRequest, PolicyPort, Trace, Usage};

pub const API_KEY_ENV: &str = "PLANCYCLE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub base_url: String,
    pub model: String,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub backoff_ms: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000".into(),
            model: "default".into(),
            timeout_secs: 1800,
            max_attempts: 3,
            backoff_ms: 1000,
        }
    }
}

/// Client for an OpenAI-style `/v1/chat/completions` endpoint.
pub struct HttpPolicy {
    config: HttpConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

enum Attempt {
    Done(Value),
    /// Worth retrying: transport errors, 429 and 5xx.
    Transient(String),
    Fatal(String),
}

impl HttpPolicy {
    /// Reads the bearer token from `PLANCYCLE_API_KEY` if set.
    pub fn new(config: HttpConfig) -> Self {
        Self::with_api_key(config, std::env::var(API_KEY_ENV).ok())
    }

    pub fn with_api_key(config: HttpConfig, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, api_key, agent }
    }

    fn url(&self) -> String {
        format!("{}/v1/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let mut req = self.agent.post(self.url());
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = match req.send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Transient(e.to_string()),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Transient(e.to_string()),
        };
        match status {
            200..=299 => match serde_json::from_str(&text) {
                Ok(v) => Attempt::Done(v),
                Err(e) => Attempt::Fatal(format!("malformed response body: {e}")),
            },
            429 | 500..=599 => Attempt::Transient(format!("HTTP {status}: {text}")),
            _ => Attempt::Fatal(format!("HTTP {status}: {text}")),
        }
    }
}

/// Raw text, finish reason and usage from a chat-completions response. A
/// separate `reasoning_content` field is folded back into think tags.
fn parse_response(v: &Value) -> Result<(String, FinishReason, Usage), String> {
    let choice = v.pointer("/choices/0").ok_or("response has no choices")?;
    let content = choice.pointer("/message/content").and_then(Value::as_str).unwrap_or_default();
    let reasoning = choice.pointer("/message/reasoning_content").and_then(Value::as_str);
    let raw = match reasoning {
        Some(r) if !content.contains("<think>") => format!("<think>{r}</think>{content}"),
        _ => content.to_string(),
    };
    let finish = match choice.get("finish_reason").and_then(Value::as_str) {
        Some("length") => FinishReason::Length,
        _ => FinishReason::Stop,
    };
    let usage = Usage {
        completion_tokens: v.pointer("/usage/completion_tokens").and_then(Value::as_u64),
        reasoning_tokens: v.pointer("/usage/completion_tokens_details/reasoning_tokens").and_then(Value::as_u64),
    };
    Ok((raw, finish, usage))
}

impl PolicyPort for HttpPolicy {
    fn generate(&self, req: &GenerationRequest<'_>) -> Trace {
        let started = Instant::now();
        let model = req.params.model_ref.clone().unwrap_or_else(|| self.config.model.clone());
        let body = json!({
            "model": model,
            "messages": [{"role": "user", "content": req.prompt.render()}],
            "temperature": req.params.temperature,
            "max_tokens": req.params.max_tokens,
        });
        let elapsed = || started.elapsed().as_millis() as u64;
        let fail = |msg: String| Trace::failed(req.task_id, req.generation, req.run, req.seed, msg, elapsed());
        let attempts = self.config.max_attempts.max(1);
        let mut last = String::new();
        for i in 0..attempts {
            if i > 0 {
                thread::sleep(Duration::from_millis(self.config.backoff_ms << (i - 1)));
            }
            match self.attempt(&body) {
                Attempt::Done(v) => {
                    return match parse_response(&v) {
                        Ok((raw, finish, usage)) => Trace::from_raw(
                            req.task_id,
                            req.generation,
                            req.run,
                            raw,
                            finish,
                            usage,
                            elapsed(),
                            req.seed,
                        ),
                        Err(e) => fail(e),
                    };
                }
                Attempt::Fatal(e) => return fail(e),
                Attempt::Transient(e) => last = e,
            }
        }
        fail(format!("giving up after {attempts} attempts: {last}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_reasoning_field_and_usage() {
        let v = json!({
            "choices": [{"message": {"content": "(a b)", "reasoning_content": "x y"}, "finish_reason": "stop"}],
            "usage": {"completion_tokens": 9}
        });
        let (raw, finish, usage) = parse_response(&v).unwrap();
        assert_eq!(raw, "<think>x y</think>(a b)");
        assert_eq!(finish, FinishReason::Stop);
        assert_eq!(usage, Usage { completion_tokens: Some(9), reasoning_tokens: None });
    }

    #[test]
    fn length_and_missing_choices() {
        let v = json!({"choices": [{"message": {"content": "<think>..."}, "finish_reason": "length"}]});
        assert_eq!(parse_response(&v).unwrap().1, FinishReason::Length);
        assert!(parse_response(&json!({"choices": []})).is_err());
    }
}
