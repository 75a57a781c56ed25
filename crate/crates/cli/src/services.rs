//! Backend construction and run manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use factcheck_core::cost::PricingTable;
use factcheck_core::llm::{LlmGateway, OpenAiChat, ScriptedChat};
use factcheck_core::pipeline::{Clock, Pipeline, PipelineConfig, RetrievalConfig};
use factcheck_core::prompt;
use factcheck_core::retry::RetryPolicy;
use factcheck_core::search::{Language, MockSearch, SearchCache, SearchGateway, SerperSearch};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tracing::{info, warn};

use crate::config::{Backend, RunConfig, DEFAULT_CACHE};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MOCK_LLM_FILE: &str = "llm.jsonl";
pub const MOCK_SEARCH_FILE: &str = "search.json";
pub const MOCK_INPUT_FILE: &str = "input.txt";

pub struct Services {
    pub llm: LlmGateway,
    pub search: Option<SearchGateway>,
    pub clock: Clock,
}

fn pricing(cfg: &RunConfig) -> Result<PricingTable> {
    let table = match &cfg.pricing_path {
        Some(p) => PricingTable::load(p)?,
        None => PricingTable::default(),
    };
    if table.model(&cfg.model_id).is_none() {
        warn!(model = %cfg.model_id, "no price configured for model; LLM cost will be reported as zero");
    }
    Ok(table)
}

impl Services {
    /// Builds the gateways. The search side is only set up when
    /// `with_search` is set, so commands that never search need no search
    /// credentials or fixtures.
    pub fn build(cfg: &RunConfig, with_search: bool) -> Result<Self> {
        let pricing = Arc::new(pricing(cfg)?);
        match &cfg.backend {
            Backend::Mock(dir) => {
                let chat = ScriptedChat::load(&dir.join(MOCK_LLM_FILE))?;
                let llm = LlmGateway::new(Arc::new(chat), pricing.clone()).with_retry(RetryPolicy::immediate());
                let search = if with_search {
                    let backend = MockSearch::load(&dir.join(MOCK_SEARCH_FILE))?;
                    Some(
                        SearchGateway::new(
                            Arc::new(backend),
                            Arc::new(SearchCache::in_memory()),
                            pricing.search_per_query,
                        )
                        .with_retry(RetryPolicy::immediate()),
                    )
                } else {
                    None
                };
                Ok(Self {
                    llm,
                    search,
                    clock: Clock::Frozen,
                })
            }
            Backend::Live => {
                let chat = OpenAiChat::from_env()?;
                let llm = LlmGateway::new(Arc::new(chat), pricing.clone());
                let search = if with_search {
                    let backend = SerperSearch::from_env()?.with_locale(Language::Ur, "pk", "ur");
                    let path = cfg.cache_path.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE));
                    let cache =
                        SearchCache::open(&path).with_context(|| format!("opening search cache {}", path.display()))?;
                    Some(
                        SearchGateway::new(Arc::new(backend), Arc::new(cache), pricing.search_per_query)
                            .bypassing_cache(cfg.bypass_cache),
                    )
                } else {
                    None
                };
                Ok(Self {
                    llm,
                    search,
                    clock: Clock::System,
                })
            }
        }
    }

    pub fn pipeline(&self, cfg: &RunConfig) -> Pipeline {
        let search = self.search.clone().expect("services built with search");
        let config = PipelineConfig {
            retrieval: RetrievalConfig {
                strategy: cfg.strategy,
                tau: cfg.tau,
                requested_results: cfg.requested_results,
            },
            workers: cfg.workers,
            temperature: cfg.temperature,
            clock: self.clock,
            ..PipelineConfig::default()
        };
        Pipeline::new(self.llm.clone(), search, cfg.model_id.clone(), config)
    }

    /// Persists the search cache of live runs.
    pub fn finish(&self) -> Result<()> {
        if let Some(search) = &self.search {
            search.cache().save()?;
            if let Some(p) = search.cache().path() {
                info!(path = %p.display(), entries = search.cache().len(), "search cache saved");
            }
        }
        Ok(())
    }

    pub fn identities(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        out.insert("llm".to_string(), self.llm.backend_identity());
        if let Some(s) = &self.search {
            out.insert("search".to_string(), s.backend_identity());
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

pub fn hash_input(path: &Path) -> Result<InputFile> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(InputFile {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Everything needed to repeat a run. Contains no timestamps so that mock
/// runs produce identical manifests.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'a str,
    pub config: Option<&'a RunConfig>,
    pub seed: Option<u64>,
    pub prompt_hashes: BTreeMap<String, String>,
    pub backends: BTreeMap<String, String>,
    pub inputs: Vec<InputFile>,
    pub outputs: Vec<String>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, config: Option<&'a RunConfig>) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            seed: config.and_then(|c| c.seed),
            prompt_hashes: prompt::asset_hashes(),
            backends: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &format!("{}\n", serde_json::to_string_pretty(self)?))
    }
}

pub fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

/// `out.jsonl` -> `out.jsonl.manifest.json`
pub fn sibling_manifest(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}
