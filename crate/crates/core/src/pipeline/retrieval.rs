use std::collections::HashSet;

use tracing::warn;

use super::{EvidenceSet, Pipeline, PipelineError, QueryPair};
use crate::search::{normalize_url, EvidenceSnippet, Language, SearchQuery};
use crate::translation::{Direction, TranslationRequest};

/// Snippets from the English leg, already back-translated.
struct EnglishLeg {
    snippets: Vec<EvidenceSnippet>,
    dropped: Vec<crate::translation::DroppedSnippet>,
    warnings: Vec<String>,
}

fn query_id(pair: &QueryPair, which: usize, language: Language) -> String {
    format!("c{}.q{}.{}", pair.claim_index, which, language)
}

/// Appends snippets whose URL has not been seen yet.
fn union_into(out: &mut Vec<EvidenceSnippet>, seen: &mut HashSet<String>, snippets: Vec<EvidenceSnippet>) {
    for s in snippets {
        if seen.insert(normalize_url(&s.url)) {
            out.push(s);
        }
    }
}

impl Pipeline {
    /// Runs both queries in `language` and merges the results, first query
    /// first. Fails only if every query fails.
    fn search_both(
        &self,
        pair: &QueryPair,
        queries: &[(usize, String)],
        language: Language,
        seen: &mut HashSet<String>,
        warnings: &mut Vec<String>,
    ) -> Result<Vec<EvidenceSnippet>, PipelineError> {
        let mut out = Vec::new();
        let mut failures = Vec::new();
        for (which, text) in queries {
            let query = SearchQuery::new(text.clone(), language)
                .with_id(query_id(pair, *which, language))
                .with_results(self.config.retrieval.requested_results);
            match self.search.search(&query) {
                Ok(snippets) => union_into(&mut out, seen, snippets),
                Err(e) => {
                    warn!(query = %query.id, error = %e, "search failed");
                    failures.push(format!("{}: {e}", query.id));
                }
            }
        }
        if !queries.is_empty() && failures.len() == queries.len() {
            return Err(PipelineError::Retrieval(failures.join("; ")));
        }
        warnings.extend(failures);
        Ok(out)
    }

    /// Urdu search with both queries, deduplicated by URL across the pair.
    pub fn retrieve_monolingual(&self, pair: &QueryPair) -> Result<EvidenceSet, PipelineError> {
        let queries = [(1, pair.question_query.clone()), (2, pair.claim_query.clone())];
        let mut warnings = Vec::new();
        let snippets = self.search_both(pair, &queries, Language::Ur, &mut HashSet::new(), &mut warnings)?;
        Ok(EvidenceSet {
            urdu_count: snippets.len(),
            translated_count: 0,
            fallback_used: false,
            snippets,
            dropped: Vec::new(),
            warnings,
        })
    }

    /// Translate queries, search in English, back-translate the results.
    /// URLs already in `seen` are skipped before any back-translation.
    fn english_leg(&self, pair: &QueryPair, seen: &mut HashSet<String>) -> Result<EnglishLeg, PipelineError> {
        let mut warnings = Vec::new();
        let mut queries = Vec::new();
        for (which, text) in [(1, &pair.question_query), (2, &pair.claim_query)] {
            match self
                .translator
                .translate(&TranslationRequest::new(text.clone(), Direction::UrToEn))
            {
                Ok(en) => queries.push((which, en)),
                Err(e) => {
                    warn!(claim = pair.claim_index, which, error = %e, "query translation failed");
                    warnings.push(format!("{}: {e}", query_id(pair, which, Language::En)));
                }
            }
        }
        if queries.is_empty() {
            return Err(PipelineError::Retrieval(format!(
                "could not translate either query: {}",
                warnings.join("; ")
            )));
        }
        let english = self.search_both(pair, &queries, Language::En, seen, &mut warnings)?;
        let translated = self.translator.translate_snippets(&english);
        for d in &translated.dropped {
            warnings.push(format!("dropped {}: {}", d.url, d.reason));
        }
        Ok(EnglishLeg {
            snippets: translated.snippets,
            dropped: translated.dropped,
            warnings,
        })
    }

    /// English-only evidence, tagged `en-ur`.
    pub fn retrieve_translated(&self, pair: &QueryPair) -> Result<EvidenceSet, PipelineError> {
        let leg = self.english_leg(pair, &mut HashSet::new())?;
        Ok(EvidenceSet {
            urdu_count: 0,
            translated_count: leg.snippets.len(),
            fallback_used: false,
            snippets: leg.snippets,
            dropped: leg.dropped,
            warnings: leg.warnings,
        })
    }

    /// Urdu evidence alone when there are at least `tau` snippets, otherwise
    /// the union with translated English evidence. If the English leg fails
    /// outright the Urdu evidence is kept and the failure noted.
    pub fn retrieve_thresholded(&self, pair: &QueryPair, tau: usize) -> Result<EvidenceSet, PipelineError> {
        if tau == 0 {
            return Err(PipelineError::InvalidConfig("tau must be at least 1".into()));
        }
        let mut set = self.retrieve_monolingual(pair)?;
        if set.urdu_count >= tau {
            return Ok(set);
        }
        set.fallback_used = true;
        let mut seen: HashSet<String> = set.snippets.iter().map(|s| normalize_url(&s.url)).collect();
        match self.english_leg(pair, &mut seen) {
            Ok(leg) => {
                set.translated_count = leg.snippets.len();
                set.snippets.extend(leg.snippets);
                set.dropped = leg.dropped;
                set.warnings.extend(leg.warnings);
            }
            Err(e) => {
                warn!(claim = pair.claim_index, error = %e, "fallback retrieval failed; keeping Urdu evidence");
                set.warnings.push(format!("fallback failed: {e}"));
            }
        }
        Ok(set)
    }
}
