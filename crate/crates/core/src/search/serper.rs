use std::collections::HashMap;
use std::time::Duration;

use serde_json::{json, Value};

use super::{Language, SearchBackend, SearchHit, SearchQuery};
use crate::backend::{classify_status, BackendError};

pub const DEFAULT_ENDPOINT: &str = "https://google.serper.dev/search";
pub const ENDPOINT_ENV: &str = "SEARCH_API_URL";
pub const KEY_ENV: &str = "SERPER_API_KEY";

/// Serper.dev Google SERP client.
pub struct SerperSearch {
    endpoint: String,
    api_key: String,
    http: reqwest::blocking::Client,
    /// Optional `gl`/`hl` pair per query language.
    locales: HashMap<Language, (String, String)>,
}

impl SerperSearch {
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
            locales: HashMap::new(),
        })
    }

    pub fn from_env() -> Result<Self, BackendError> {
        let endpoint = std::env::var(ENDPOINT_ENV).unwrap_or_else(|_| DEFAULT_ENDPOINT.to_string());
        let key = std::env::var(KEY_ENV).map_err(|_| BackendError::Auth(format!("{KEY_ENV} is not set")))?;
        Self::new(endpoint, key, Duration::from_secs(30))
    }

    /// Constrains searches in `language` to a country (`gl`) and interface
    /// language (`hl`), e.g. `("pk", "ur")`.
    pub fn with_locale(mut self, language: Language, country: &str, interface_language: &str) -> Self {
        self.locales
            .insert(language, (country.to_string(), interface_language.to_string()));
        self
    }

    pub fn request_body(&self, query: &SearchQuery) -> Value {
        let mut body = json!({ "q": query.text, "num": query.requested_results });
        if let Some((gl, hl)) = self.locales.get(&query.language) {
            body["gl"] = json!(gl);
            body["hl"] = json!(hl);
        }
        body
    }

    pub fn parse_body(body: &Value) -> Vec<SearchHit> {
        body.get("organic")
            .and_then(Value::as_array)
            .map(|items| {
                items
                    .iter()
                    .map(|item| {
                        let field = |k: &str| item.get(k).and_then(Value::as_str).unwrap_or_default().to_string();
                        SearchHit {
                            title: field("title"),
                            snippet: field("snippet"),
                            url: field("link"),
                        }
                    })
                    .collect()
            })
            .unwrap_or_default()
    }
}

impl SearchBackend for SerperSearch {
    fn identity(&self) -> String {
        format!("serper:{}", self.endpoint)
    }

    fn search(&self, query: &SearchQuery) -> Result<Vec<SearchHit>, BackendError> {
        let resp = self
            .http
            .post(&self.endpoint)
            .header("X-API-KEY", &self.api_key)
            .json(&self.request_body(query))
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if !resp.status().is_success() {
            return Err(classify_status(status, resp.text().unwrap_or_default()));
        }
        let body: Value = resp.json().map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self::parse_body(&body))
    }
}
