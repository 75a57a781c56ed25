//! Urdu/English translation through the chat gateway, used for query
//! translation and evidence back-translation.

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::llm::{ChatRequest, LlmError, LlmGateway};
use crate::prompt::{self, PromptTemplate};
use crate::search::{EvidenceLanguage, EvidenceSnippet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "ur-en")]
    UrToEn,
    #[serde(rename = "en-ur")]
    EnToUr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationRequest {
    pub text: String,
    pub direction: Direction,
}

impl TranslationRequest {
    pub fn new(text: impl Into<String>, direction: Direction) -> Self {
        Self {
            text: text.into(),
            direction,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TranslationError {
    #[error("nothing to translate")]
    EmptyInput,
    #[error("model returned an empty translation")]
    EmptyOutput,
    #[error("model refused to translate: {0}")]
    Refusal(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedSnippet {
    pub url: String,
    pub query_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SnippetTranslation {
    pub snippets: Vec<EvidenceSnippet>,
    pub dropped: Vec<DroppedSnippet>,
}

const REFUSAL_PREFIXES: &[&str] = &["i'm sorry", "i am sorry", "i cannot", "i can't", "as an ai"];

#[derive(Clone)]
pub struct Translator {
    llm: LlmGateway,
    model_id: String,
    temperature: f64,
    to_english: PromptTemplate,
    to_urdu: PromptTemplate,
}

impl Translator {
    pub fn new(llm: LlmGateway, model_id: impl Into<String>) -> Self {
        Self {
            llm,
            model_id: model_id.into(),
            temperature: crate::llm::DEFAULT_TEMPERATURE,
            to_english: prompt::translate_ur_en(),
            to_urdu: prompt::translate_en_ur(),
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    /// Same prompts and model, calling through `llm`.
    pub fn with_llm(&self, llm: LlmGateway) -> Self {
        Self { llm, ..self.clone() }
    }

    pub fn translate(&self, request: &TranslationRequest) -> Result<String, TranslationError> {
        let input = request.text.trim();
        if input.is_empty() {
            return Err(TranslationError::EmptyInput);
        }
        let template = match request.direction {
            Direction::UrToEn => &self.to_english,
            Direction::EnToUr => &self.to_urdu,
        };
        let rendered = template.render(&[("input", input)]).map_err(LlmError::from)?;
        let chat = ChatRequest::new(&self.model_id, rendered)
            .for_template(&template.name, input)
            .with_temperature(self.temperature);
        let reply = self.llm.complete(&chat)?;
        let out = reply.text.trim();
        if out.is_empty() {
            return Err(TranslationError::EmptyOutput);
        }
        let lowered = out.to_lowercase();
        if REFUSAL_PREFIXES.iter().any(|p| lowered.starts_with(p)) {
            return Err(TranslationError::Refusal(out.chars().take(120).collect()));
        }
        Ok(out.to_string())
    }

    fn to_urdu(&self, text: &str) -> Result<String, TranslationError> {
        if text.trim().is_empty() {
            return Ok(String::new());
        }
        self.translate(&TranslationRequest::new(text, Direction::EnToUr))
    }

    /// Back-translates English snippets one call per field. A snippet whose
    /// translation fails is dropped with a warning; the rest keep their url,
    /// rank, query id and order, and are tagged `en-ur`.
    pub fn translate_snippets(&self, snippets: &[EvidenceSnippet]) -> SnippetTranslation {
        let mut out = SnippetTranslation::default();
        for snippet in snippets {
            let result = if snippet.language != EvidenceLanguage::En {
                Err(format!("expected an English snippet, got {:?}", snippet.language))
            } else {
                self.to_urdu(&snippet.title)
                    .and_then(|title| Ok((title, self.to_urdu(&snippet.snippet)?)))
                    .map_err(|e| e.to_string())
            };
            match result {
                Ok((title, text)) => out.snippets.push(EvidenceSnippet {
                    title,
                    snippet: text,
                    language: EvidenceLanguage::EnUr,
                    ..snippet.clone()
                }),
                Err(reason) => {
                    warn!(url = %snippet.url, %reason, "dropping snippet after failed back-translation");
                    out.dropped.push(DroppedSnippet {
                        url: snippet.url.clone(),
                        query_id: snippet.query_id.clone(),
                        reason,
                    });
                }
            }
        }
        out
    }
}
