//! Translation-assisted dataset drafting: MMR selection of few-shot
//! exemplars and guideline-constrained English to Urdu translation. Output
//! is a draft for human review.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::llm::{ChatRequest, LlmError, LlmGateway};
use crate::prompt::{self, PromptTemplate, TemplateError};

pub const DEFAULT_LAMBDA: f64 = 0.5;
pub const DEFAULT_K: usize = 5;
pub const DRAFT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CurationError {
    #[error("exemplar pool is empty")]
    EmptyPool,
    #[error("cannot select {k} exemplars from a pool of {pool}")]
    KTooLarge { k: usize, pool: usize },
    #[error("lambda must be in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("exemplar {index} has an empty {field}")]
    InvalidExemplar { index: usize, field: &'static str },
    #[error("unknown similarity {0:?}")]
    UnknownSimilarity(String),
    #[error("model returned an empty translation")]
    EmptyOutput,
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub source_text: String,
    pub target_text: String,
    #[serde(alias = "source")]
    pub source_dataset: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Similarity {
    /// Cosine over character trigram counts of the lowercased, space-padded
    /// text.
    #[default]
    CharTrigramCosine,
}

impl Similarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CharTrigramCosine => "char-trigram-cosine",
        }
    }

    pub fn score(self, a: &str, b: &str) -> f64 {
        match self {
            Self::CharTrigramCosine => cosine(&trigram_profile(a), &trigram_profile(b)),
        }
    }
}

impl FromStr for Similarity {
    type Err = CurationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "char-trigram-cosine" => Ok(Self::CharTrigramCosine),
            other => Err(CurationError::UnknownSimilarity(other.to_string())),
        }
    }
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type Profile = HashMap<[char; 3], u32>;

pub fn trigram_profile(text: &str) -> Profile {
    let padded: Vec<char> = std::iter::once(' ')
        .chain(text.to_lowercase().chars())
        .chain(std::iter::once(' '))
        .collect();
    let mut profile = Profile::new();
    for w in padded.windows(3) {
        *profile.entry([w[0], w[1], w[2]]).or_default() += 1;
    }
    profile
}

/// Cosine similarity of two count vectors; 0 if either is empty.
pub fn cosine(a: &Profile, b: &Profile) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    // Integer sums keep the result independent of map iteration order.
    let dot: u64 = small
        .iter()
        .filter_map(|(k, x)| large.get(k).map(|y| *x as u64 * *y as u64))
        .sum();
    let norm = |p: &Profile| (p.values().map(|v| (*v as u64).pow(2)).sum::<u64>() as f64).sqrt();
    let dot = dot as f64;
    let den = norm(a) * norm(b);
    if den == 0.0 {
        0.0
    } else {
        dot / den
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarPool {
    pub exemplars: Vec<Exemplar>,
    pub similarity: Similarity,
}

impl ExemplarPool {
    pub fn new(exemplars: Vec<Exemplar>) -> Result<Self, CurationError> {
        for (index, e) in exemplars.iter().enumerate() {
            if e.source_text.trim().is_empty() {
                return Err(CurationError::InvalidExemplar {
                    index,
                    field: "source_text",
                });
            }
            if e.target_text.trim().is_empty() {
                return Err(CurationError::InvalidExemplar {
                    index,
                    field: "target_text",
                });
            }
        }
        Ok(Self {
            exemplars,
            similarity: Similarity::default(),
        })
    }

    pub fn with_similarity(mut self, similarity: Similarity) -> Self {
        self.similarity = similarity;
        self
    }

    /// One exemplar per JSONL line.
    pub fn load(path: &Path) -> Result<Self, CurationError> {
        Self::new(read_jsonl(path)?)
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CurationError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CurationError::File {
        path: display.clone(),
        message: e.to_string(),
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| CurationError::File {
                path: display.clone(),
                message: format!("line {}: {e}", n + 1),
            })
        })
        .collect()
}

/// Greedy maximal marginal relevance. Each step picks the candidate
/// maximizing `lambda * sim(c, query) - (1 - lambda) * max sim(c, selected)`;
/// the earliest pool entry wins ties. Returns pool indices in selection
/// order. `k = 0` selects nothing.
pub fn mmr_select_indices(
    pool: &ExemplarPool,
    query: &str,
    k: usize,
    lambda: f64,
) -> Result<Vec<usize>, CurationError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(CurationError::InvalidLambda(lambda));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    if pool.is_empty() {
        return Err(CurationError::EmptyPool);
    }
    if k > pool.len() {
        return Err(CurationError::KTooLarge { k, pool: pool.len() });
    }
    let profiles: Vec<Profile> = pool.exemplars.iter().map(|e| trigram_profile(&e.source_text)).collect();
    let sim = |a: &Profile, b: &Profile| match pool.similarity {
        Similarity::CharTrigramCosine => cosine(a, b),
    };
    let q = trigram_profile(query);
    let relevance: Vec<f64> = profiles.iter().map(|p| sim(p, &q)).collect();
    // Highest similarity to anything selected so far.
    let mut redundancy = vec![f64::NEG_INFINITY; pool.len()];
    let mut chosen = vec![false; pool.len()];
    let mut order = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..pool.len()).filter(|&i| !chosen[i]) {
            let penalty = if order.is_empty() { 0.0 } else { redundancy[i] };
            let score = lambda * relevance[i] - (1.0 - lambda) * penalty;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let (pick, _) = best.expect("k <= pool size");
        chosen[pick] = true;
        order.push(pick);
        for i in (0..pool.len()).filter(|&i| !chosen[i]) {
            redundancy[i] = redundancy[i].max(sim(&profiles[i], &profiles[pick]));
        }
    }
    Ok(order)
}

pub fn mmr_select(pool: &ExemplarPool, query: &str, k: usize, lambda: f64) -> Result<Vec<Exemplar>, CurationError> {
    Ok(mmr_select_indices(pool, query, k, lambda)?
        .into_iter()
        .map(|i| pool.exemplars[i].clone())
        .collect())
}

/// An English record to translate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceText {
    pub id: String,
    #[serde(alias = "claim", alias = "question")]
    pub text: String,
}

pub fn load_source_texts(path: &Path) -> Result<Vec<SourceText>, CurationError> {
    read_jsonl(path)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReviewStatus {
    PendingReview,
}

/// One line of the review file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Draft {
    pub schema_version: u32,
    pub id: String,
    pub source_text: String,
    pub draft_text: String,
    /// Pool indices of the exemplars shown to the model.
    pub exemplars: Vec<usize>,
    pub status: ReviewStatus,
}

pub fn format_exemplars(exemplars: &[Exemplar]) -> String {
    exemplars
        .iter()
        .map(|e| format!("[English]: {}\n[Urdu]: {}", e.source_text.trim(), e.target_text.trim()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Clone)]
pub struct Curator {
    llm: LlmGateway,
    model_id: String,
    temperature: f64,
    template: PromptTemplate,
    pub lambda: f64,
    pub k: usize,
}

impl Curator {
    pub fn new(llm: LlmGateway, model_id: impl Into<String>) -> Self {
        Self {
            llm,
            model_id: model_id.into(),
            temperature: crate::llm::DEFAULT_TEMPERATURE,
            template: prompt::pre_translation(),
            lambda: DEFAULT_LAMBDA,
            k: DEFAULT_K,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_template(mut self, template: PromptTemplate) -> Self {
        self.template = template;
        self
    }

    pub fn with_selection(mut self, k: usize, lambda: f64) -> Self {
        self.k = k;
        self.lambda = lambda;
        self
    }

    /// Translates one English text with the given exemplars in the prompt.
    pub fn translate_record(&self, text: &str, exemplars: &[Exemplar]) -> Result<String, CurationError> {
        let input = text.trim();
        let examples = format_exemplars(exemplars);
        let rendered = self.template.render(&[("examples", &examples), ("input", input)])?;
        let request = ChatRequest::new(&self.model_id, rendered)
            .for_template(&self.template.name, input)
            .with_temperature(self.temperature);
        let reply = self.llm.complete(&request)?;
        let out = reply.text.trim();
        if out.is_empty() {
            return Err(CurationError::EmptyOutput);
        }
        Ok(out.to_string())
    }

    /// Selects exemplars for `record` and drafts its translation.
    pub fn draft(&self, pool: &ExemplarPool, record: &SourceText) -> Result<Draft, CurationError> {
        let picked = mmr_select_indices(pool, &record.text, self.k, self.lambda)?;
        let exemplars: Vec<Exemplar> = picked.iter().map(|&i| pool.exemplars[i].clone()).collect();
        let draft_text = self.translate_record(&record.text, &exemplars)?;
        Ok(Draft {
            schema_version: DRAFT_SCHEMA_VERSION,
            id: record.id.clone(),
            source_text: record.text.clone(),
            draft_text,
            exemplars: picked,
            status: ReviewStatus::PendingReview,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::PricingTable;
    use crate::llm::{BackendReply, FnChat, ScriptedChat};
    use crate::prompt::{OutputShape, PRE_TRANSLATION};
    use crate::retry::RetryPolicy;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn ex(s: &str) -> Exemplar {
        Exemplar {
            source_text: s.into(),
            target_text: format!("ur {s}"),
            source_dataset: "test".into(),
        }
    }

    fn pool(texts: &[&str]) -> ExemplarPool {
        ExemplarPool::new(texts.iter().map(|t| ex(t)).collect()).unwrap()
    }

    #[test]
    fn identical_texts_have_similarity_one() {
        let s = Similarity::CharTrigramCosine.score("Lahore Fort", "lahore fort");
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(Similarity::CharTrigramCosine.score("abc", "xyz"), 0.0);
        assert_eq!(Similarity::CharTrigramCosine.score("", ""), 0.0);
    }

    #[test]
    fn lambda_one_is_relevance_ranking() {
        let p = pool(&[
            "the capital of france",
            "paris is the capital",
            "bananas are yellow",
            "capital city paris",
        ]);
        let picked = mmr_select_indices(&p, "what is the capital of france", 4, 1.0).unwrap();
        let mut by_rel: Vec<usize> = (0..4).collect();
        let q = trigram_profile("what is the capital of france");
        let rel: Vec<f64> = p
            .exemplars
            .iter()
            .map(|e| cosine(&trigram_profile(&e.source_text), &q))
            .collect();
        by_rel.sort_by(|a, b| rel[*b].partial_cmp(&rel[*a]).unwrap());
        assert_eq!(picked, by_rel);
    }

    #[test]
    fn duplicate_is_not_second() {
        let p = pool(&["karachi is a port city", "karachi is a port city", "lahore has a fort"]);
        let picked = mmr_select_indices(&p, "karachi port", 2, 0.5).unwrap();
        assert_eq!(picked[0], 0);
        assert_eq!(picked[1], 2);
    }

    #[test]
    fn ties_go_to_pool_order() {
        let p = pool(&["zzz", "yyy", "xxx"]);
        assert_eq!(mmr_select_indices(&p, "abc", 3, 0.7).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn bounds() {
        let p = pool(&["a", "b"]);
        assert!(matches!(
            mmr_select(&p, "q", 3, 0.5),
            Err(CurationError::KTooLarge { k: 3, pool: 2 })
        ));
        assert!(matches!(
            mmr_select(&p, "q", 1, 1.5),
            Err(CurationError::InvalidLambda(_))
        ));
        assert!(mmr_select(&p, "q", 0, 0.5).unwrap().is_empty());
        let empty = ExemplarPool::new(vec![]).unwrap();
        assert!(matches!(mmr_select(&empty, "q", 1, 0.5), Err(CurationError::EmptyPool)));
        assert!(ExemplarPool::new(vec![ex("  ")]).is_err());
    }

    /// Direct transcription of the selection rule over all candidates.
    fn oracle(texts: &[String], query: &str, k: usize, lambda: f64) -> Vec<usize> {
        let sim = |a: &str, b: &str| Similarity::CharTrigramCosine.score(a, b);
        let mut selected: Vec<usize> = Vec::new();
        while selected.len() < k {
            let mut best = None;
            let mut best_score = f64::NEG_INFINITY;
            for i in 0..texts.len() {
                if selected.contains(&i) {
                    continue;
                }
                let red = selected
                    .iter()
                    .map(|&j| sim(&texts[i], &texts[j]))
                    .fold(f64::NEG_INFINITY, f64::max);
                let red = if selected.is_empty() { 0.0 } else { red };
                let score = lambda * sim(&texts[i], query) - (1.0 - lambda) * red;
                if best.is_none() || score > best_score {
                    best = Some(i);
                    best_score = score;
                }
            }
            selected.push(best.unwrap());
        }
        selected
    }

    proptest! {
        #[test]
        fn matches_oracle(
            texts in prop::collection::vec("[abc ]{1,8}", 1..=6),
            query in "[abc ]{0,8}",
            lambda in 0.0f64..=1.0,
            k_seed in 0usize..6,
        ) {
            let k = k_seed % texts.len() + 1;
            let p = ExemplarPool::new(texts.iter().map(|t| Exemplar {
                source_text: t.clone(),
                target_text: "x".into(),
                source_dataset: "p".into(),
            }).collect());
            prop_assume!(p.is_ok());
            let got = mmr_select_indices(&p.unwrap(), &query, k, lambda).unwrap();
            prop_assert_eq!(&got, &oracle(&texts, &query, k, lambda));
            let mut uniq = got.clone();
            uniq.sort();
            uniq.dedup();
            prop_assert_eq!(uniq.len(), got.len());
        }
    }

    fn curator(backend: impl crate::llm::ChatBackend + 'static) -> Curator {
        let gw =
            LlmGateway::new(Arc::new(backend), Arc::new(PricingTable::default())).with_retry(RetryPolicy::immediate());
        Curator::new(gw, "m")
    }

    #[test]
    fn canned_draft() {
        let c = curator(ScriptedChat::new().with_reply(
            PRE_TRANSLATION,
            "Karachi is the largest city of Pakistan.",
            "کراچی پاکستان کا سب سے بڑا شہر ہے۔",
        ));
        let p = pool(&["Lahore is in Punjab.", "The Indus is a river.", "Karachi has a port."]);
        let d = c
            .with_selection(2, 0.5)
            .draft(
                &p,
                &SourceText {
                    id: "x1".into(),
                    text: "Karachi is the largest city of Pakistan.".into(),
                },
            )
            .unwrap();
        assert_eq!(d.draft_text, "کراچی پاکستان کا سب سے بڑا شہر ہے۔");
        assert_eq!(d.exemplars.len(), 2);
        assert_eq!(d.status, ReviewStatus::PendingReview);
    }

    #[test]
    fn zero_exemplars_still_render() {
        let c = curator(FnChat::new(|req| {
            assert!(req.user_text.contains("Proper nouns"));
            assert!(req.user_text.contains("[English]: hello"));
            Ok(BackendReply::text("ہیلو"))
        }));
        assert_eq!(c.translate_record("hello", &[]).unwrap(), "ہیلو");
    }

    #[test]
    fn unbound_placeholder_is_a_render_error() {
        let c = curator(FnChat::new(|_| panic!("must not be called"))).with_template(PromptTemplate::new(
            PRE_TRANSLATION,
            "{examples}\n{glossary}\n{input}",
            OutputShape::FreeText,
        ));
        assert!(matches!(c.translate_record("x", &[]), Err(CurationError::Template(_))));
    }

    #[test]
    fn empty_output_is_an_error() {
        let c = curator(FnChat::new(|_| Ok(BackendReply::text(" "))));
        assert!(matches!(c.translate_record("x", &[]), Err(CurationError::EmptyOutput)));
    }
}
