//! Claim extraction, query generation, evidence retrieval and verification.
//!
//! A [`Pipeline`] owns one LLM gateway and one search gateway. Every call made
//! through it is billed to a ledger chain run -> claim, so both run totals and
//! per-claim spend are available afterwards.

mod report;
mod retrieval;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use crate::cost::CostLedger;
use crate::llm::{parse_judgment, parse_list, ChatRequest, LlmError, LlmGateway};
use crate::prompt::{self, PromptTemplate};
use crate::search::{
    normalize_query_text, SearchCache, SearchError, SearchGateway, DEFAULT_REQUESTED_RESULTS, MAX_REQUESTED_RESULTS,
};
use crate::translation::Translator;

pub use report::{
    AtomicClaim, ClaimEntry, ClaimStatus, EvidenceSet, FactCheckReport, Mode, QueryPair, Strategy, Timings, Verdict,
    REPORT_SCHEMA_VERSION,
};

pub const DEFAULT_TAU: usize = 5;
pub const DEFAULT_WORKERS: usize = 4;
/// Character budget for evidence text placed in the verification prompt.
pub const DEFAULT_MAX_EVIDENCE_CHARS: usize = 12_000;

const REPROMPT_NOTE: &str =
    "Your previous reply could not be used. Reply again using exactly the requested format. Problem:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub strategy: Strategy,
    pub tau: usize,
    pub requested_results: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Thresholded,
            tau: DEFAULT_TAU,
            requested_results: DEFAULT_REQUESTED_RESULTS,
        }
    }
}

impl RetrievalConfig {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }

    pub fn thresholded(tau: usize) -> Self {
        Self { tau, ..Self::default() }
    }

    pub fn with_requested_results(mut self, n: usize) -> Self {
        self.requested_results = n;
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.strategy == Strategy::Thresholded && self.tau == 0 {
            return Err(PipelineError::InvalidConfig("tau must be at least 1".into()));
        }
        if !(1..=MAX_REQUESTED_RESULTS).contains(&self.requested_results) {
            return Err(PipelineError::InvalidConfig(format!(
                "requested_results must be in [1, {MAX_REQUESTED_RESULTS}], got {}",
                self.requested_results
            )));
        }
        Ok(())
    }

    /// Tau as reported: only meaningful for the thresholded strategy.
    pub fn reported_tau(&self) -> Option<usize> {
        (self.strategy == Strategy::Thresholded).then_some(self.tau)
    }
}

/// Source of report timings. `Frozen` reports zero durations so that runs
/// against scripted backends serialize identically.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Clock {
    #[default]
    System,
    Frozen,
}

impl Clock {
    pub fn start(self) -> Option<Instant> {
        match self {
            Self::System => Some(Instant::now()),
            Self::Frozen => None,
        }
    }

    pub fn elapsed_ms(start: Option<Instant>) -> u64 {
        start.map(|s| s.elapsed().as_millis() as u64).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub retrieval: RetrievalConfig,
    pub workers: usize,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub max_evidence_chars: usize,
    pub clock: Clock,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            retrieval: RetrievalConfig::default(),
            workers: DEFAULT_WORKERS,
            temperature: crate::llm::DEFAULT_TEMPERATURE,
            max_output_tokens: crate::llm::DEFAULT_MAX_OUTPUT_TOKENS,
            max_evidence_chars: DEFAULT_MAX_EVIDENCE_CHARS,
            clock: Clock::System,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("input text is empty")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("claim extraction failed: {reason}")]
    Extraction { reason: String, raw: String },
    #[error("query generation failed: {reason}")]
    QueryGeneration { reason: String, raw: String },
    #[error("retrieval failed: {0}")]
    Retrieval(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    /// No usable judgment after one re-prompt.
    #[error("verifier output unusable: {reason}")]
    Unverifiable { reason: String, raw: String },
    #[error(transparent)]
    Llm(#[from] LlmError),
}

enum AskError {
    Llm(LlmError),
    Malformed { reason: String, raw: String },
}

impl From<LlmError> for AskError {
    fn from(e: LlmError) -> Self {
        Self::Llm(e)
    }
}

#[derive(Clone)]
pub struct Pipeline {
    llm: LlmGateway,
    search: SearchGateway,
    translator: Translator,
    model_id: String,
    config: PipelineConfig,
    extraction: PromptTemplate,
    query_generation: PromptTemplate,
    verification: PromptTemplate,
}

impl Pipeline {
    /// Search spend is redirected to the LLM gateway's ledger so that one
    /// ledger holds the whole bill.
    pub fn new(llm: LlmGateway, search: SearchGateway, model_id: impl Into<String>, config: PipelineConfig) -> Self {
        let model_id = model_id.into();
        let search = search.with_ledger(llm.ledger().clone());
        let translator = Translator::new(llm.clone(), model_id.clone()).with_temperature(config.temperature);
        Self {
            llm,
            search,
            translator,
            model_id,
            config,
            extraction: prompt::claim_extraction(),
            query_generation: prompt::query_generation(),
            verification: prompt::verification(),
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn ledger(&self) -> &CostLedger {
        self.llm.ledger()
    }

    pub fn llm(&self) -> &LlmGateway {
        &self.llm
    }

    pub fn search_gateway(&self) -> &SearchGateway {
        &self.search
    }

    /// Same pipeline with a different retrieval configuration.
    pub fn with_retrieval(&self, retrieval: RetrievalConfig) -> Self {
        let mut p = self.clone();
        p.config.retrieval = retrieval;
        p
    }

    /// Same pipeline billing into `ledger` for both gateways.
    pub fn with_ledger(&self, ledger: CostLedger) -> Self {
        let llm = self.llm.with_ledger(ledger.clone());
        Self {
            search: self.search.with_ledger(ledger),
            translator: self.translator.with_llm(llm.clone()),
            llm,
            ..self.clone()
        }
    }

    /// Copy with its own root ledger and an empty in-memory search cache, so
    /// its spend is independent of anything run before.
    pub fn isolated(&self) -> Self {
        let search = self.search.with_cache(Arc::new(SearchCache::in_memory()));
        Self { search, ..self.clone() }.with_ledger(CostLedger::new())
    }

    fn ask<T>(
        &self,
        template: &PromptTemplate,
        bindings: &[(&str, &str)],
        key_input: &str,
        accept: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, AskError> {
        let base = template.render(bindings).map_err(LlmError::from)?;
        let mut failure = (String::new(), String::new());
        for attempt in 0..2 {
            let text = if attempt == 0 {
                base.clone()
            } else {
                format!("{base}\n\n{REPROMPT_NOTE} {}", failure.0)
            };
            let request = ChatRequest::new(&self.model_id, text)
                .for_template(&template.name, key_input)
                .with_temperature(self.config.temperature)
                .with_max_output_tokens(self.config.max_output_tokens);
            let reply = self.llm.complete(&request)?;
            match accept(&reply.text) {
                Ok(value) => return Ok(value),
                Err(reason) => {
                    warn!(template = %template.name, attempt, %reason, "malformed model output");
                    failure = (reason, reply.text);
                }
            }
        }
        Err(AskError::Malformed {
            reason: failure.0,
            raw: failure.1,
        })
    }

    /// Splits free text into atomic claims. An empty list is a valid result.
    pub fn process_claims(&self, text: &str) -> Result<Vec<AtomicClaim>, PipelineError> {
        let input = text.trim();
        if input.is_empty() {
            return Err(PipelineError::EmptyInput);
        }
        let items = self
            .ask(&self.extraction, &[("input", input)], input, |raw| {
                parse_list(raw).map_err(|e| e.reason)
            })
            .map_err(|e| match e {
                AskError::Llm(e) => PipelineError::Llm(e),
                AskError::Malformed { reason, raw } => PipelineError::Extraction { reason, raw },
            })?;
        Ok(items
            .into_iter()
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .enumerate()
            .map(|(index, claim)| AtomicClaim {
                origin_span: char_span(text, &claim),
                index,
                text: claim,
            })
            .collect())
    }

    pub fn generate_queries(&self, claim: &AtomicClaim) -> Result<QueryPair, PipelineError> {
        let input = claim.text.trim();
        if input.is_empty() {
            return Err(PipelineError::EmptyInput);
        }
        let (question_query, claim_query) = self
            .ask(&self.query_generation, &[("input", input)], input, |raw| {
                let items = parse_list(raw).map_err(|e| e.reason)?;
                let items: Vec<String> = items.into_iter().map(|q| q.trim().to_string()).collect();
                match items.as_slice() {
                    [q, c] if q.is_empty() || c.is_empty() => Err("a query is empty".to_string()),
                    [q, c] if normalize_query_text(q) == normalize_query_text(c) => {
                        Err("the two queries are identical".to_string())
                    }
                    [q, c] => Ok((q.clone(), c.clone())),
                    other => Err(format!("expected exactly 2 queries, got {}", other.len())),
                }
            })
            .map_err(|e| match e {
                AskError::Llm(e) => PipelineError::Llm(e),
                AskError::Malformed { reason, raw } => PipelineError::QueryGeneration { reason, raw },
            })?;
        Ok(QueryPair {
            claim_index: claim.index,
            question_query,
            claim_query,
        })
    }

    /// Evidence for one claim under the configured strategy.
    pub fn retrieve(&self, pair: &QueryPair) -> Result<EvidenceSet, PipelineError> {
        let cfg = self.config.retrieval;
        match cfg.strategy {
            Strategy::Monolingual => self.retrieve_monolingual(pair),
            Strategy::Translated => self.retrieve_translated(pair),
            Strategy::Thresholded => self.retrieve_thresholded(pair, cfg.tau),
        }
    }

    /// Judges a claim against its evidence. Snippets are fed best rank first
    /// until the character budget runs out.
    pub fn verify(&self, claim: &AtomicClaim, evidence: &EvidenceSet) -> Result<Verdict, VerifyError> {
        let mut order: Vec<usize> = (0..evidence.snippets.len()).collect();
        order.sort_by_key(|&i| evidence.snippets[i].rank);
        let mut budget = self.config.max_evidence_chars;
        let mut items = Vec::new();
        let mut used = Vec::new();
        for i in order {
            let s = &evidence.snippets[i];
            let item = if s.title.trim().is_empty() {
                s.snippet.trim().to_string()
            } else {
                format!("{} - {}", s.title.trim(), s.snippet.trim())
            };
            let len = item.chars().count();
            if len > budget {
                debug!(url = %s.url, rank = s.rank, "evidence budget exhausted");
                break;
            }
            budget -= len;
            items.push(item);
            used.push(s.url.clone());
        }
        let rendered_evidence = serde_json::to_string(&items).expect("strings serialize");
        let input = claim.text.trim();
        let judgment = self
            .ask(
                &self.verification,
                &[("claim", input), ("evidence", &rendered_evidence)],
                input,
                |raw| {
                    let j = parse_judgment(raw).map_err(|e| e.reason)?;
                    if j.reasoning.trim().is_empty() {
                        return Err("reasoning is empty".into());
                    }
                    Ok(j)
                },
            )
            .map_err(|e| match e {
                AskError::Llm(e) => VerifyError::Llm(e),
                AskError::Malformed { reason, raw } => VerifyError::Unverifiable { reason, raw },
            })?;
        Ok(Verdict {
            label: judgment.label,
            reasoning: judgment.reasoning.trim().to_string(),
            error: judgment.error,
            correction: judgment.correction,
            evidence_used: used,
        })
    }

    /// Query generation, retrieval and verification for one claim. Failures
    /// are recorded on the entry rather than returned.
    pub fn check_claim(&self, claim: &AtomicClaim) -> ClaimEntry {
        let mut entry = ClaimEntry {
            claim: claim.clone(),
            status: ClaimStatus::Failed,
            queries: None,
            evidence: None,
            verdict: None,
            error: None,
            cost: Default::default(),
        };
        let pair = match self.generate_queries(claim) {
            Ok(p) => p,
            Err(e) => {
                warn!(claim = claim.index, error = %e, "query generation failed");
                entry.error = Some(e.to_string());
                return entry;
            }
        };
        entry.queries = Some(pair.clone());
        let evidence = match self.retrieve(&pair) {
            Ok(e) => e,
            Err(e) => {
                warn!(claim = claim.index, error = %e, "retrieval failed");
                entry.error = Some(e.to_string());
                return entry;
            }
        };
        match self.verify(claim, &evidence) {
            Ok(v) => {
                entry.status = ClaimStatus::Verified;
                entry.verdict = Some(v);
            }
            Err(e) => {
                warn!(claim = claim.index, error = %e, "verification failed");
                if matches!(e, VerifyError::Unverifiable { .. }) {
                    entry.status = ClaimStatus::Unverifiable;
                }
                entry.error = Some(e.to_string());
            }
        }
        entry.evidence = Some(evidence);
        entry
    }

    /// Checks claims on a bounded pool of worker threads. Each claim bills
    /// its own child of `ledger`; output order follows input order.
    pub fn check_claims(&self, claims: &[AtomicClaim], ledger: &CostLedger) -> Vec<ClaimEntry> {
        let workers = self.config.workers.max(1).min(claims.len().max(1));
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<ClaimEntry>>> = Mutex::new(vec![None; claims.len()]);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(claim) = claims.get(i) else { break };
                    let claim_ledger = ledger.child();
                    let mut entry = self.with_ledger(claim_ledger.clone()).check_claim(claim);
                    entry.cost = claim_ledger.snapshot();
                    slots.lock().expect("slot lock")[i] = Some(entry);
                });
            }
        });
        slots
            .into_inner()
            .expect("slot lock")
            .into_iter()
            .map(|e| e.expect("every claim checked"))
            .collect()
    }

    /// Full run over one input. In benchmark mode the input is taken as a
    /// single claim and extraction is skipped.
    pub fn run(&self, text: &str, mode: Mode) -> Result<FactCheckReport, PipelineError> {
        self.config.retrieval.validate()?;
        let source = text.trim();
        if source.is_empty() {
            return Err(PipelineError::EmptyInput);
        }
        let run_ledger = self.ledger().child();
        let scoped = self.with_ledger(run_ledger.clone());
        let clock = self.config.clock;
        let total = clock.start();
        let extraction = clock.start();
        let claims = match mode {
            Mode::Free => scoped.process_claims(text)?,
            Mode::Benchmark => vec![AtomicClaim {
                index: 0,
                text: source.to_string(),
                origin_span: char_span(text, source),
            }],
        };
        let extraction_ms = Clock::elapsed_ms(extraction);
        let checking = clock.start();
        let entries = scoped.check_claims(&claims, &run_ledger);
        let claims_ms = Clock::elapsed_ms(checking);
        Ok(FactCheckReport {
            schema_version: REPORT_SCHEMA_VERSION,
            model_id: self.model_id.clone(),
            mode,
            strategy: self.config.retrieval.strategy,
            tau: self.config.retrieval.reported_tau(),
            requested_results: self.config.retrieval.requested_results,
            source_text: text.to_string(),
            claims: entries,
            ledger: run_ledger.snapshot(),
            timings: Timings {
                extraction_ms,
                claims_ms,
                total_ms: Clock::elapsed_ms(total),
            },
        })
    }
}

/// Character range of `needle` in `haystack`, if present.
fn char_span(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    let byte = haystack.find(needle)?;
    let start = haystack[..byte].chars().count();
    Some((start, start + needle.chars().count()))
}
