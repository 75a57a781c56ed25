//! Report types. Serialized as JSON; `schema_version` is bumped on any
//! incompatible change.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::LedgerSnapshot;
use crate::datasets::BinaryLabel;
use crate::search::EvidenceSnippet;
use crate::translation::DroppedSnippet;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Monolingual,
    Translated,
    Thresholded,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Monolingual => "monolingual",
            Self::Translated => "translated",
            Self::Thresholded => "thresholded",
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "monolingual" | "mono" => Ok(Self::Monolingual),
            "translated" | "tr" => Ok(Self::Translated),
            "thresholded" | "th-tr" => Ok(Self::Thresholded),
            other => Err(format!(
                "unknown strategy {other:?} (expected monolingual, translated or thresholded)"
            )),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether input text is decomposed into claims or taken as one claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Free,
    Benchmark,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicClaim {
    pub index: usize,
    pub text: String,
    /// Character range `[start, end)` of the claim in the source text, when
    /// it appears there verbatim.
    pub origin_span: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPair {
    pub claim_index: usize,
    /// Question phrasing that does not reveal the claimed fact.
    pub question_query: String,
    /// The claim restated as a search statement.
    pub claim_query: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSet {
    pub snippets: Vec<EvidenceSnippet>,
    pub urdu_count: usize,
    pub translated_count: usize,
    pub fallback_used: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<DroppedSnippet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: BinaryLabel,
    pub reasoning: String,
    pub error: Option<String>,
    pub correction: Option<String>,
    /// URLs of the snippets placed in the verification prompt. Empty when
    /// the judgment rests on the model's own knowledge.
    pub evidence_used: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimStatus {
    Verified,
    /// The verifier never produced a parseable judgment.
    Unverifiable,
    /// An earlier stage failed.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimEntry {
    pub claim: AtomicClaim,
    pub status: ClaimStatus,
    pub queries: Option<QueryPair>,
    pub evidence: Option<EvidenceSet>,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
    /// Spend attributed to this claim. Not serialized: when claims share a
    /// cached search, which claim pays depends on scheduling.
    #[serde(skip)]
    pub cost: LedgerSnapshot,
}

impl ClaimEntry {
    pub fn label(&self) -> Option<BinaryLabel> {
        self.verdict.as_ref().map(|v| v.label)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub extraction_ms: u64,
    pub claims_ms: u64,
    pub total_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactCheckReport {
    pub schema_version: u32,
    pub model_id: String,
    pub mode: Mode,
    pub strategy: Strategy,
    /// Present only for the thresholded strategy.
    pub tau: Option<usize>,
    pub requested_results: usize,
    pub source_text: String,
    pub claims: Vec<ClaimEntry>,
    pub ledger: LedgerSnapshot,
    pub timings: Timings,
}

impl FactCheckReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn fallback_count(&self) -> usize {
        self.claims
            .iter()
            .filter(|c| c.evidence.as_ref().is_some_and(|e| e.fallback_used))
            .count()
    }
}

impl fmt::Display for FactCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tau = self.tau.map(|t| format!(" tau={t}")).unwrap_or_default();
        writeln!(
            f,
            "strategy={}{} model={} claims={}",
            self.strategy,
            tau,
            self.model_id,
            self.claims.len()
        )?;
        writeln!(
            f,
            "{:>4}  {:<13} {:>4} {:>4} {:>3}  claim",
            "#", "verdict", "ur", "tr", "fb"
        )?;
        for entry in &self.claims {
            let verdict = match (entry.status, entry.label()) {
                (ClaimStatus::Verified, Some(l)) => l.as_str().to_string(),
                (status, _) => format!("{status:?}").to_lowercase(),
            };
            let (ur, tr, fb) = entry
                .evidence
                .as_ref()
                .map(|e| {
                    (
                        e.urdu_count,
                        e.translated_count,
                        if e.fallback_used { "yes" } else { "no" },
                    )
                })
                .unwrap_or((0, 0, "-"));
            writeln!(
                f,
                "{:>4}  {:<13} {:>4} {:>4} {:>3}  {}",
                entry.claim.index, verdict, ur, tr, fb, entry.claim.text
            )?;
        }
        write!(
            f,
            "cost: llm {} + search {} = {} ({} llm calls, {} searches, {} cache hits)",
            self.ledger.llm_cost,
            self.ledger.search_cost,
            self.ledger.total_cost,
            self.ledger.llm_calls,
            self.ledger.search_calls,
            self.ledger.search_cache_hits
        )
    }
}
