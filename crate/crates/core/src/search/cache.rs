//! Search result cache, optionally persisted as one JSON document:
//!
//! ```json
//! {"schema_version": 1,
//!  "entries": {"<cache key>": {"text": "...", "language": "ur",
//!                              "requested_results": 10, "hits": [...]}}}
//! ```
//!
//! Entries are keyed by [`super::cache_key`] and written in key order.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{Language, SearchHit, SearchQuery};

pub const CACHE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub text: String,
    pub language: Language,
    pub requested_results: usize,
    pub hits: Vec<SearchHit>,
}

impl CacheEntry {
    pub(crate) fn new(query: &SearchQuery, hits: Vec<SearchHit>) -> Self {
        Self {
            text: query.text.clone(),
            language: query.language,
            requested_results: query.requested_results,
            hits,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    schema_version: u32,
    entries: BTreeMap<String, CacheEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cache {path} is corrupt: {message}")]
    Corrupt { path: String, message: String },
}

type Slot = Arc<Mutex<Option<CacheEntry>>>;

/// Each key owns a slot; a query holds its slot's lock while fetching, so
/// concurrent identical queries bill exactly once.
#[derive(Debug, Default)]
pub struct SearchCache {
    slots: Mutex<HashMap<String, Slot>>,
    path: Option<PathBuf>,
    dirty: AtomicBool,
}

impl SearchCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens a persistent cache; a missing file starts empty.
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let display = path.display().to_string();
        let mut slots = HashMap::new();
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|source| CacheError::Io {
                path: display.clone(),
                source,
            })?;
            let file: CacheFile = serde_json::from_str(&text).map_err(|e| CacheError::Corrupt {
                path: display.clone(),
                message: e.to_string(),
            })?;
            if file.schema_version != CACHE_SCHEMA_VERSION {
                return Err(CacheError::Corrupt {
                    path: display,
                    message: format!("unsupported schema_version {}", file.schema_version),
                });
            }
            for (key, entry) in file.entries {
                slots.insert(key, Arc::new(Mutex::new(Some(entry))));
            }
        }
        Ok(Self {
            slots: Mutex::new(slots),
            path: Some(path.to_path_buf()),
            dirty: AtomicBool::new(false),
        })
    }

    pub(crate) fn slot(&self, key: &str) -> Slot {
        let mut slots = self.slots.lock().expect("cache poisoned");
        slots.entry(key.to_string()).or_default().clone()
    }

    pub(crate) fn mark_dirty(&self) {
        self.dirty.store(true, Ordering::Release);
    }

    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        let slot = self.slots.lock().expect("cache poisoned").get(key).cloned()?;
        let entry = slot.lock().expect("cache slot poisoned").clone();
        entry
    }

    pub fn len(&self) -> usize {
        self.snapshot().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn snapshot(&self) -> BTreeMap<String, CacheEntry> {
        let slots: Vec<(String, Slot)> = self
            .slots
            .lock()
            .expect("cache poisoned")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        slots
            .into_iter()
            .filter_map(|(k, slot)| {
                let entry = slot.lock().expect("cache slot poisoned").clone();
                entry.map(|e| (k, e))
            })
            .collect()
    }

    /// Writes the cache to its file if anything changed. In-memory caches
    /// are a no-op.
    pub fn save(&self) -> Result<(), CacheError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        if !self.dirty.swap(false, Ordering::AcqRel) {
            return Ok(());
        }
        let display = path.display().to_string();
        let file = CacheFile {
            schema_version: CACHE_SCHEMA_VERSION,
            entries: self.snapshot(),
        };
        let body = serde_json::to_string_pretty(&file).expect("cache serializes");
        let tmp = path.with_extension("tmp");
        let io = |source| CacheError::Io {
            path: display.clone(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        std::fs::write(&tmp, body).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::Money;
    use crate::search::{cache_key, FnSearch, SearchGateway};

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/cache.json");
        let query = SearchQuery::new("لاہور", Language::Ur);
        {
            let cache = Arc::new(SearchCache::open(&path).unwrap());
            let gw = SearchGateway::new(
                Arc::new(FnSearch::new(|_| {
                    Ok(vec![SearchHit {
                        title: "t".into(),
                        snippet: "s".into(),
                        url: "https://a.pk".into(),
                    }])
                })),
                cache.clone(),
                Money::from_dollars(0.00105),
            );
            gw.search(&query).unwrap();
            cache.save().unwrap();
        }
        let reloaded = SearchCache::open(&path).unwrap();
        let entry = reloaded.get(&cache_key(&query)).unwrap();
        assert_eq!(entry.hits.len(), 1);
        assert_eq!(entry.text, "لاہور");

        let gw = SearchGateway::new(
            Arc::new(FnSearch::new(|_| panic!("cache should answer"))),
            Arc::new(reloaded),
            Money::from_dollars(0.00105),
        );
        assert_eq!(gw.search(&query).unwrap().len(), 1);
        assert_eq!(gw.ledger().snapshot().search_calls, 0);
    }

    #[test]
    fn corrupt_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        std::fs::write(&path, "{oops").unwrap();
        assert!(matches!(SearchCache::open(&path), Err(CacheError::Corrupt { .. })));
    }

    #[test]
    fn in_memory_save_is_noop() {
        assert!(SearchCache::in_memory().save().is_ok());
    }
}
