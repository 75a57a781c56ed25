//! Web-search gateway: snippet retrieval with URL deduplication, a
//! persistent result cache and per-query billing.

mod cache;
mod mock;
mod serper;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::BackendError;
use crate::cost::{CostLedger, Money};
use crate::retry::{RetryFailure, RetryPolicy};

pub use cache::{CacheError, SearchCache};
pub use mock::{FnSearch, MockSearch, SearchFixtureError};
pub use serper::SerperSearch;

pub const DEFAULT_REQUESTED_RESULTS: usize = 10;
pub const MAX_REQUESTED_RESULTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Ur,
    En,
}

impl Language {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ur => "ur",
            Self::En => "en",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Provenance of a snippet's text. `EnUr` marks English results that were
/// translated into Urdu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvidenceLanguage {
    #[serde(rename = "ur")]
    Ur,
    #[serde(rename = "en")]
    En,
    #[serde(rename = "en-ur")]
    EnUr,
}

impl From<Language> for EvidenceLanguage {
    fn from(l: Language) -> Self {
        match l {
            Language::Ur => Self::Ur,
            Language::En => Self::En,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    /// Provenance id stamped onto every returned snippet. Not part of the
    /// cache key.
    pub id: String,
    pub text: String,
    pub language: Language,
    pub requested_results: usize,
}

impl SearchQuery {
    pub fn new(text: impl Into<String>, language: Language) -> Self {
        Self {
            id: String::new(),
            text: text.into(),
            language,
            requested_results: DEFAULT_REQUESTED_RESULTS,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_results(mut self, n: usize) -> Self {
        self.requested_results = n;
        self
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.text.trim().is_empty() {
            return Err(SearchError::InvalidQuery("query text is empty".into()));
        }
        if !(1..=MAX_REQUESTED_RESULTS).contains(&self.requested_results) {
            return Err(SearchError::InvalidQuery(format!(
                "requested_results must be in [1, {MAX_REQUESTED_RESULTS}], got {}",
                self.requested_results
            )));
        }
        Ok(())
    }
}

/// A raw organic result as returned by a backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub title: String,
    pub snippet: String,
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSnippet {
    pub title: String,
    pub snippet: String,
    pub url: String,
    /// 1-based position in the originating query's deduplicated results.
    pub rank: u32,
    pub language: EvidenceLanguage,
    pub query_id: String,
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("search authentication failed: {0}")]
    Auth(String),
    #[error("search quota exceeded: {0}")]
    QuotaExceeded(String),
    #[error("search gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: BackendError },
    #[error(transparent)]
    Backend(BackendError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

pub trait SearchBackend: Send + Sync {
    fn identity(&self) -> String;
    fn search(&self, query: &SearchQuery) -> Result<Vec<SearchHit>, BackendError>;
}

/// Whitespace-collapsed, lowercased query text.
pub fn normalize_query_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Deterministic key over (normalized text, language, requested results).
pub fn cache_key(query: &SearchQuery) -> String {
    let material = format!(
        "v1\u{1f}{}\u{1f}{}\u{1f}{}",
        query.language.as_str(),
        query.requested_results,
        normalize_query_text(&query.text)
    );
    hex::encode(Sha256::digest(material.as_bytes()))
}

/// Canonical form used for URL deduplication: scheme, `www.`, fragment and
/// trailing slash are ignored; host is lowercased.
pub fn normalize_url(raw: &str) -> String {
    let trimmed = raw.trim();
    match url::Url::parse(trimmed) {
        Ok(u) if u.host_str().is_some() => {
            let host = u.host_str().unwrap_or_default();
            let host = host.strip_prefix("www.").unwrap_or(host);
            let port = u.port().map(|p| format!(":{p}")).unwrap_or_default();
            let path = u.path().trim_end_matches('/');
            let query = u.query().map(|q| format!("?{q}")).unwrap_or_default();
            format!("{host}{port}{path}{query}")
        }
        _ => trimmed.trim_end_matches('/').to_lowercase(),
    }
}

/// Drops hits without a URL and repeated URLs (first occurrence wins), then
/// truncates to `limit`.
pub fn dedupe_hits(hits: Vec<SearchHit>, limit: usize) -> Vec<SearchHit> {
    let mut seen = std::collections::HashSet::new();
    hits.into_iter()
        .filter(|h| !h.url.trim().is_empty())
        .filter(|h| seen.insert(normalize_url(&h.url)))
        .take(limit)
        .collect()
}

#[derive(Clone)]
pub struct SearchGateway {
    backend: Arc<dyn SearchBackend>,
    cache: Arc<SearchCache>,
    ledger: CostLedger,
    unit_cost: Money,
    retry: RetryPolicy,
    bypass_cache: bool,
}

impl SearchGateway {
    pub fn new(backend: Arc<dyn SearchBackend>, cache: Arc<SearchCache>, unit_cost: Money) -> Self {
        Self {
            backend,
            cache,
            ledger: CostLedger::new(),
            unit_cost,
            retry: RetryPolicy::default(),
            bypass_cache: false,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Skip cache reads; fresh results still overwrite cached ones.
    pub fn bypassing_cache(mut self, bypass: bool) -> Self {
        self.bypass_cache = bypass;
        self
    }

    pub fn with_ledger(&self, ledger: CostLedger) -> Self {
        Self { ledger, ..self.clone() }
    }

    pub fn with_cache(&self, cache: Arc<SearchCache>) -> Self {
        Self { cache, ..self.clone() }
    }

    pub fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    pub fn cache(&self) -> &Arc<SearchCache> {
        &self.cache
    }

    pub fn unit_cost(&self) -> Money {
        self.unit_cost
    }

    pub fn backend_identity(&self) -> String {
        self.backend.identity()
    }

    pub fn search(&self, query: &SearchQuery) -> Result<Vec<EvidenceSnippet>, SearchError> {
        query.validate()?;
        let key = cache_key(query);
        let slot = self.cache.slot(&key);
        let mut guard = slot.lock().expect("cache slot poisoned");
        if !self.bypass_cache {
            if let Some(entry) = guard.as_ref() {
                self.ledger.record_cache_hit();
                return Ok(stamp(&entry.hits, query));
            }
        }
        let raw = self
            .retry
            .run(|_| self.backend.search(query), BackendError::is_retryable)
            .map_err(|failure| match failure {
                RetryFailure::Permanent(BackendError::Auth(m)) => SearchError::Auth(m),
                RetryFailure::Permanent(e) => SearchError::Backend(e),
                RetryFailure::Exhausted {
                    last: BackendError::Server { status: 429, body },
                    ..
                } => SearchError::QuotaExceeded(body),
                RetryFailure::Exhausted { attempts, last } => SearchError::RetriesExhausted { attempts, last },
            })?;
        self.ledger.record_search(query.language.as_str(), self.unit_cost);
        let hits = dedupe_hits(raw, query.requested_results);
        let snippets = stamp(&hits, query);
        *guard = Some(cache::CacheEntry::new(query, hits));
        self.cache.mark_dirty();
        Ok(snippets)
    }
}

fn stamp(hits: &[SearchHit], query: &SearchQuery) -> Vec<EvidenceSnippet> {
    let query_id = if query.id.is_empty() {
        cache_key(query)[..12].to_string()
    } else {
        query.id.clone()
    };
    hits.iter()
        .enumerate()
        .map(|(i, h)| EvidenceSnippet {
            title: h.title.clone(),
            snippet: h.snippet.clone(),
            url: h.url.clone(),
            rank: i as u32 + 1,
            language: query.language.into(),
            query_id: query_id.clone(),
        })
        .collect()
}
