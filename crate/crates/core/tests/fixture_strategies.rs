use std::path::{Path, PathBuf};
use std::sync::Arc;

use factcheck_core::cost::PricingTable;
use factcheck_core::evaluation::run_benchmark;
use factcheck_core::llm::{LlmGateway, ScriptedChat};
use factcheck_core::pipeline::{Clock, Mode, Pipeline, PipelineConfig, RetrievalConfig, Strategy};
use factcheck_core::prompt::{TRANSLATE_EN_UR, TRANSLATE_UR_EN};
use factcheck_core::retry::RetryPolicy;
use factcheck_core::search::{MockSearch, SearchCache, SearchGateway};

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/run1")
}

fn pipeline(retrieval: RetrievalConfig) -> Pipeline {
    let pricing = PricingTable::load(&dir().join("pricing.json")).unwrap();
    let unit = pricing.search_per_query;
    let llm = LlmGateway::new(
        Arc::new(ScriptedChat::load(&dir().join("llm.jsonl")).unwrap()),
        Arc::new(pricing),
    )
    .with_retry(RetryPolicy::immediate());
    let search = SearchGateway::new(
        Arc::new(MockSearch::load(&dir().join("search.json")).unwrap()),
        Arc::new(SearchCache::in_memory()),
        unit,
    )
    .with_retry(RetryPolicy::immediate());
    let config = PipelineConfig {
        retrieval,
        clock: Clock::Frozen,
        ..PipelineConfig::default()
    };
    Pipeline::new(llm, search, "mock-model", config)
}

fn text() -> String {
    std::fs::read_to_string(dir().join("input.txt")).unwrap()
}

#[test]
fn monolingual_never_translates() {
    let p = pipeline(RetrievalConfig::new(Strategy::Monolingual));
    let report = p.run(&text(), Mode::Free).unwrap();
    assert_eq!(report.tau, None);
    assert_eq!(report.fallback_count(), 0);
    let snap = p.ledger().snapshot();
    assert_eq!(snap.calls_for_template(TRANSLATE_UR_EN), 0);
    assert_eq!(snap.searches_in("en"), 0);
    assert_eq!(snap.searches_in("ur"), 10);
}

#[test]
fn translated_uses_only_english_evidence() {
    let p = pipeline(RetrievalConfig::new(Strategy::Translated));
    let report = p.run(&text(), Mode::Free).unwrap();
    for entry in &report.claims {
        let ev = entry.evidence.as_ref().unwrap();
        assert_eq!(ev.urdu_count, 0);
        assert_eq!(ev.translated_count, 6);
        assert!(ev.snippets.iter().all(|s| s.title.starts_with("اردو")));
    }
    let snap = p.ledger().snapshot();
    assert_eq!(snap.searches_in("ur"), 0);
    assert_eq!(snap.calls_for_template(TRANSLATE_UR_EN), 10);
    assert_eq!(snap.calls_for_template(TRANSLATE_EN_UR), 60);
}

#[test]
fn thresholded_sits_between_in_cost() {
    let cost = |cfg| {
        let p = pipeline(cfg);
        p.run(&text(), Mode::Free).unwrap();
        p.ledger().snapshot()
    };
    let mono = cost(RetrievalConfig::new(Strategy::Monolingual));
    let th = cost(RetrievalConfig::thresholded(5));
    let tr = cost(RetrievalConfig::new(Strategy::Translated));
    assert!(mono.total_cost < th.total_cost);
    // Fewer translations than the always-translate strategy, but the Urdu
    // searches come on top of the English ones for claims that fall back.
    assert!(th.llm_cost < tr.llm_cost);
    assert_eq!(th.search_calls, 10 + 4);
    assert_eq!(tr.search_calls, 10);
}

#[test]
fn benchmark_over_fixture_claims() {
    let records = factcheck_core::datasets::load_claims(&dir().join("claims.jsonl")).unwrap();
    let (metrics, entries) = run_benchmark(&pipeline(RetrievalConfig::default()), &records).unwrap();
    assert_eq!(entries.len(), 5);
    assert_eq!(metrics.scored, 5);
    assert_eq!(metrics.fallback_count, 2);
    assert_eq!(metrics.scores.true_label.metrics.f1, 1.0);
    assert_eq!(metrics.scores.false_label.metrics.f1, 1.0);
}
