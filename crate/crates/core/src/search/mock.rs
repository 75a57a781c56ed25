use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{normalize_query_text, SearchBackend, SearchHit, SearchQuery};
use crate::backend::BackendError;

#[derive(Deserialize)]
#[serde(untagged)]
enum FixtureValue {
    Hits(Vec<SearchHit>),
    Failure { error: String },
}

#[derive(Deserialize)]
struct FixtureFile {
    queries: HashMap<String, FixtureValue>,
}

#[derive(Debug, thiserror::Error)]
pub enum SearchFixtureError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

/// Canned search results keyed by normalized query text.
///
/// Fixture file: `{"queries": {"<query text>": [{"title", "snippet", "url"}, ...]}}`.
/// A value of `{"error": "transient" | "auth" | "quota"}` injects a failure.
/// Unknown queries fail with [`BackendError::Unexpected`].
#[derive(Default)]
pub struct MockSearch {
    results: HashMap<String, Result<Vec<SearchHit>, BackendError>>,
    identity: String,
}

impl MockSearch {
    pub fn new() -> Self {
        Self {
            results: HashMap::new(),
            identity: "mock-search:inline".into(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, SearchFixtureError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| SearchFixtureError::Io {
            path: display.clone(),
            source,
        })?;
        let file: FixtureFile = serde_json::from_str(&text).map_err(|e| SearchFixtureError::Invalid {
            path: display.clone(),
            message: e.to_string(),
        })?;
        let mut mock = Self::new();
        for (query, value) in file.queries {
            let result = match value {
                FixtureValue::Hits(hits) => Ok(hits),
                FixtureValue::Failure { error } => Err(match error.as_str() {
                    "transient" => BackendError::Transport("injected transient failure".into()),
                    "auth" => BackendError::Auth("injected auth failure".into()),
                    "quota" => BackendError::Server {
                        status: 429,
                        body: "injected quota failure".into(),
                    },
                    other => {
                        return Err(SearchFixtureError::Invalid {
                            path: display,
                            message: format!("unknown error kind {other:?} for query {query:?}"),
                        })
                    }
                }),
            };
            mock.results.insert(normalize_query_text(&query), result);
        }
        mock.identity = format!("mock-search:sha256:{}", hex::encode(Sha256::digest(text.as_bytes())));
        Ok(mock)
    }

    pub fn with_results(mut self, query: &str, hits: Vec<SearchHit>) -> Self {
        self.results.insert(normalize_query_text(query), Ok(hits));
        self
    }

    pub fn with_failure(mut self, query: &str, error: BackendError) -> Self {
        self.results.insert(normalize_query_text(query), Err(error));
        self
    }
}

impl SearchBackend for MockSearch {
    fn identity(&self) -> String {
        self.identity.clone()
    }

    fn search(&self, query: &SearchQuery) -> Result<Vec<SearchHit>, BackendError> {
        match self.results.get(&normalize_query_text(&query.text)) {
            Some(result) => result.clone(),
            None => Err(BackendError::Unexpected(format!(
                "no canned results for {} query {:?}",
                query.language, query.text
            ))),
        }
    }
}

type SearchFn = dyn Fn(&SearchQuery) -> Result<Vec<SearchHit>, BackendError> + Send + Sync;

/// Backend driven by a closure.
pub struct FnSearch {
    responder: Box<SearchFn>,
}

impl FnSearch {
    pub fn new(
        responder: impl Fn(&SearchQuery) -> Result<Vec<SearchHit>, BackendError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            responder: Box::new(responder),
        }
    }
}

impl SearchBackend for FnSearch {
    fn identity(&self) -> String {
        "mock-search:fn".into()
    }

    fn search(&self, query: &SearchQuery) -> Result<Vec<SearchHit>, BackendError> {
        (self.responder)(query)
    }
}
