//! Chat-completion gateway: one entry point for every model call, with
//! retries and per-call cost accounting.

mod mock;
mod openai;
mod parse;

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cost::{CostLedger, Money, PricingTable};
use crate::prompt::TemplateError;
use crate::retry::{RetryFailure, RetryPolicy};

pub use crate::backend::BackendError;
pub use mock::{fingerprint, FnChat, ScriptedChat, TranscriptEntry, TranscriptError};
pub use openai::OpenAiChat;
pub use parse::{parse_judgment, parse_list, parse_structured, Judgment, ParseError, Structured};

pub const DEFAULT_TEMPERATURE: f64 = 0.0;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 2500;
const ADHOC_TEMPLATE: &str = "adhoc";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub system_text: Option<String>,
    pub user_text: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Prompt template the user text was rendered from.
    pub template: String,
    /// The salient input bound into the template. Together with
    /// `template` it identifies the request to scripted backends.
    pub key_input: String,
}

impl ChatRequest {
    pub fn new(model_id: impl Into<String>, user_text: impl Into<String>) -> Self {
        let user_text = user_text.into();
        Self {
            model_id: model_id.into(),
            system_text: None,
            key_input: user_text.clone(),
            user_text,
            temperature: DEFAULT_TEMPERATURE,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            template: ADHOC_TEMPLATE.to_string(),
        }
    }

    pub fn for_template(mut self, template: impl Into<String>, key_input: impl Into<String>) -> Self {
        self.template = template.into();
        self.key_input = key_input.into();
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_system(mut self, system_text: impl Into<String>) -> Self {
        self.system_text = Some(system_text.into());
        self
    }

    pub fn with_max_output_tokens(mut self, max_output_tokens: u32) -> Self {
        self.max_output_tokens = max_output_tokens;
        self
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(LlmError::InvalidRequest(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_output_tokens must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency: Duration,
    /// Set when the reply hit `max_output_tokens`.
    pub truncated: bool,
    pub cost: Money,
}

/// What a backend returns for one attempt. Missing usage is estimated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BackendReply {
    pub text: String,
    pub input_tokens: Option<u64>,
    pub output_tokens: Option<u64>,
    pub truncated: bool,
}

impl BackendReply {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            ..Self::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: BackendError },
    #[error(transparent)]
    Backend(BackendError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Model-facing backend: a live HTTP endpoint or a scripted stand-in.
pub trait ChatBackend: Send + Sync {
    /// Stable description recorded in run manifests.
    fn identity(&self) -> String;
    fn send(&self, request: &ChatRequest) -> Result<BackendReply, BackendError>;
}

/// Rough token count used when a backend does not report usage: one token
/// per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

#[derive(Clone)]
pub struct LlmGateway {
    backend: Arc<dyn ChatBackend>,
    pricing: Arc<PricingTable>,
    ledger: CostLedger,
    retry: RetryPolicy,
}

impl LlmGateway {
    pub fn new(backend: Arc<dyn ChatBackend>, pricing: Arc<PricingTable>) -> Self {
        Self {
            backend,
            pricing,
            ledger: CostLedger::new(),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Same backend and pricing, recording into `ledger` instead.
    pub fn with_ledger(&self, ledger: CostLedger) -> Self {
        Self { ledger, ..self.clone() }
    }

    pub fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    pub fn backend_identity(&self) -> String {
        self.backend.identity()
    }

    pub fn pricing(&self) -> &PricingTable {
        &self.pricing
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        let started = Instant::now();
        let reply = self
            .retry
            .run(|_| self.backend.send(request), BackendError::is_retryable)
            .map_err(|failure| match failure {
                RetryFailure::Permanent(BackendError::Auth(msg)) => LlmError::Auth(msg),
                RetryFailure::Permanent(err) => LlmError::Backend(err),
                RetryFailure::Exhausted { attempts, last } => LlmError::RetriesExhausted { attempts, last },
            })?;
        let latency = started.elapsed();

        let prompt_len =
            request.system_text.as_deref().map(estimate_tokens).unwrap_or(0) + estimate_tokens(&request.user_text);
        let input_tokens = reply.input_tokens.unwrap_or(prompt_len);
        let output_tokens = reply.output_tokens.unwrap_or_else(|| estimate_tokens(&reply.text));
        let truncated = reply.truncated || output_tokens >= u64::from(request.max_output_tokens);
        let cost = self
            .pricing
            .model(&request.model_id)
            .map(|p| p.cost(input_tokens, output_tokens))
            .unwrap_or(Money::ZERO);
        self.ledger
            .record_llm(&request.template, input_tokens, output_tokens, cost);
        Ok(ChatResponse {
            text: reply.text,
            input_tokens,
            output_tokens,
            latency,
            truncated,
            cost,
        })
    }
}
