use std::time::Duration;

use serde_json::{json, Value};

use super::{BackendError, BackendReply, ChatBackend, ChatRequest};
use crate::backend::classify_status;

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const ENDPOINT_ENV: &str = "LLM_API_URL";
pub const KEY_ENV: &str = "LLM_API_KEY";
const FALLBACK_KEY_ENV: &str = "OPENAI_API_KEY";

/// Chat-completions endpoint speaking the OpenAI wire format.
pub struct OpenAiChat {
    endpoint: String,
    api_key: String,
    http: reqwest::blocking::Client,
}

impl OpenAiChat {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: impl Into<String>,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            http,
        })
    }

    /// Reads `LLM_API_URL` (optional) and `LLM_API_KEY`, falling back to
    /// `OPENAI_API_KEY`.
    pub fn from_env() -> Result<Self, BackendError> {
        let endpoint = std::env::var(ENDPOINT_ENV).unwrap_or_else(|_| DEFAULT_ENDPOINT.to_string());
        let key = std::env::var(KEY_ENV)
            .or_else(|_| std::env::var(FALLBACK_KEY_ENV))
            .map_err(|_| BackendError::Auth(format!("{KEY_ENV} is not set")))?;
        Self::new(endpoint, key, Duration::from_secs(120))
    }

    pub fn request_body(request: &ChatRequest) -> Value {
        let mut messages = Vec::new();
        if let Some(system) = &request.system_text {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": request.user_text}));
        json!({
            "model": request.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        })
    }

    pub fn parse_body(body: &Value) -> Result<BackendReply, BackendError> {
        let choice = body
            .get("choices")
            .and_then(|c| c.get(0))
            .ok_or_else(|| BackendError::Transport("response has no choices".into()))?;
        let text = choice
            .pointer("/message/content")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        let usage = body.get("usage");
        Ok(BackendReply {
            text,
            input_tokens: usage.and_then(|u| u.get("prompt_tokens")).and_then(Value::as_u64),
            output_tokens: usage.and_then(|u| u.get("completion_tokens")).and_then(Value::as_u64),
            truncated: choice.get("finish_reason").and_then(Value::as_str) == Some("length"),
        })
    }
}

impl ChatBackend for OpenAiChat {
    fn identity(&self) -> String {
        format!("openai-chat:{}", self.endpoint)
    }

    fn send(&self, request: &ChatRequest) -> Result<BackendReply, BackendError> {
        let resp = self
            .http
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&Self::request_body(request))
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if !resp.status().is_success() {
            return Err(classify_status(status, resp.text().unwrap_or_default()));
        }
        let body: Value = resp.json().map_err(|e| BackendError::Transport(e.to_string()))?;
        Self::parse_body(&body)
    }
}
