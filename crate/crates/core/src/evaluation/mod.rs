//! Benchmark scoring, threshold sweeps, answer factuality and trivial
//! baselines.

mod chart;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::cost::{LedgerSnapshot, Money};
use crate::datasets::{BinaryLabel, ClaimRecord, QaRecord};
use crate::pipeline::{
    AtomicClaim, ClaimEntry, ClaimStatus, Clock, Mode, Pipeline, PipelineError, RetrievalConfig, Strategy,
};

pub use chart::render_sweep_svg;

pub const METRICS_SCHEMA_VERSION: u32 = 1;
pub const SWEEP_SCHEMA_VERSION: u32 = 1;
pub const FACTUALITY_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SWEEP_TAUS: [usize; 5] = [1, 3, 5, 7, 9];

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("{predictions} predictions for {gold} gold labels")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("record ids do not line up at position {position}: prediction {prediction:?}, gold {gold:?}")]
    IdMismatch {
        position: usize,
        prediction: String,
        gold: String,
    },
    #[error("no response for {} question(s): {}", .0.len(), .0.join(", "))]
    MissingResponses(Vec<String>),
    #[error("no thresholds to sweep")]
    NoThresholds,
    #[error("sweep aborted at tau={tau}: {source}")]
    SweepPoint {
        tau: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error("responses file {path}: {message}")]
    Responses { path: String, message: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A checker's output for one item. `Unverifiable` is kept apart from both
/// labels and never counted as a miss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prediction {
    True,
    False,
    Unverifiable,
}

impl From<BinaryLabel> for Prediction {
    fn from(l: BinaryLabel) -> Self {
        match l {
            BinaryLabel::True => Self::True,
            BinaryLabel::False => Self::False,
        }
    }
}

impl Prediction {
    pub fn label(self) -> Option<BinaryLabel> {
        match self {
            Self::True => Some(BinaryLabel::True),
            Self::False => Some(BinaryLabel::False),
            Self::Unverifiable => None,
        }
    }

    pub fn from_entry(entry: &ClaimEntry) -> Self {
        match (entry.status, entry.label()) {
            (ClaimStatus::Verified, Some(l)) => l.into(),
            _ => Self::Unverifiable,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    /// Items with no usable prediction, outside the four cells above.
    pub unverifiable: u64,
}

impl ConfusionCounts {
    pub fn scored(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    ratio(2.0 * precision * recall, precision + recall)
}

impl LabelMetrics {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        let precision = ratio(c.tp as f64, (c.tp + c.fp) as f64);
        let recall = ratio(c.tp as f64, (c.tp + c.fn_) as f64);
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

/// Counts and metrics with `positive` as the positive class.
pub fn score(
    predictions: &[Prediction],
    gold: &[BinaryLabel],
    positive: BinaryLabel,
) -> Result<(ConfusionCounts, LabelMetrics), EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (p, g) in predictions.iter().zip(gold) {
        let Some(p) = p.label() else {
            c.unverifiable += 1;
            continue;
        };
        match (p == positive, *g == positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok((c, LabelMetrics::from_counts(&c)))
}

/// Like [`score`], with both sides carrying record ids that must agree
/// position by position.
pub fn score_by_id(
    predictions: &[(String, Prediction)],
    gold: &[(String, BinaryLabel)],
    positive: BinaryLabel,
) -> Result<(ConfusionCounts, LabelMetrics), EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    for (position, ((pid, _), (gid, _))) in predictions.iter().zip(gold).enumerate() {
        if pid != gid {
            return Err(EvalError::IdMismatch {
                position,
                prediction: pid.clone(),
                gold: gid.clone(),
            });
        }
    }
    let p: Vec<Prediction> = predictions.iter().map(|(_, p)| *p).collect();
    let g: Vec<BinaryLabel> = gold.iter().map(|(_, g)| *g).collect();
    score(&p, &g, positive)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub counts: ConfusionCounts,
    pub metrics: LabelMetrics,
}

/// Metrics computed twice, once per positive label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerLabel {
    #[serde(rename = "true")]
    pub true_label: LabelScore,
    #[serde(rename = "false")]
    pub false_label: LabelScore,
}

impl PerLabel {
    pub fn compute(predictions: &[Prediction], gold: &[BinaryLabel]) -> Result<Self, EvalError> {
        let (tc, tm) = score(predictions, gold, BinaryLabel::True)?;
        let (fc, fm) = score(predictions, gold, BinaryLabel::False)?;
        Ok(Self {
            true_label: LabelScore {
                counts: tc,
                metrics: tm,
            },
            false_label: LabelScore {
                counts: fc,
                metrics: fm,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub name: String,
    pub scores: PerLabel,
}

/// Always-True, Always-False, the expected Random predictor (guessing each
/// label at its gold frequency) and one seeded draw of that predictor.
pub fn baselines(gold: &[BinaryLabel], seed: u64) -> Vec<BaselineRow> {
    let n = gold.len();
    let constant =
        |label: BinaryLabel| PerLabel::compute(&vec![Prediction::from(label); n], gold).expect("lengths match");
    let prevalence = ratio(
        gold.iter().filter(|g| **g == BinaryLabel::True).count() as f64,
        n as f64,
    );

    // With P(pred = l) = P(gold = l) = p independently, expected counts are
    // tp = n p^2 and fp = fn = n p (1 - p), so precision = recall = p.
    let expected = |p: f64| LabelScore {
        counts: ConfusionCounts::default(),
        metrics: LabelMetrics {
            precision: p,
            recall: p,
            f1: f1(p, p),
        },
    };
    let random_expected = PerLabel {
        true_label: expected(prevalence),
        false_label: expected(if n == 0 { 0.0 } else { 1.0 - prevalence }),
    };

    let mut rng = SplitMix64::seed_from_u64(seed);
    let draws: Vec<Prediction> = (0..n)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            if u < prevalence {
                Prediction::True
            } else {
                Prediction::False
            }
        })
        .collect();

    vec![
        BaselineRow {
            name: "random".into(),
            scores: random_expected,
        },
        BaselineRow {
            name: format!("random-empirical(seed={seed})"),
            scores: PerLabel::compute(&draws, gold).expect("lengths match"),
        },
        BaselineRow {
            name: "always-true".into(),
            scores: constant(BinaryLabel::True),
        },
        BaselineRow {
            name: "always-false".into(),
            scores: constant(BinaryLabel::False),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub id: String,
    pub gold: BinaryLabel,
    pub predicted: Prediction,
    pub fallback_used: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub model_id: String,
    pub strategy: Strategy,
    pub tau: Option<usize>,
    pub items: usize,
    pub scored: usize,
    pub unverifiable: usize,
    pub fallback_count: usize,
    pub scores: PerLabel,
    pub ledger: LedgerSnapshot,
    pub wall_clock_ms: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub baselines: Vec<BaselineRow>,
    pub outcomes: Vec<ItemOutcome>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }
}

fn metrics_row(f: &mut fmt::Formatter<'_>, name: &str, s: &PerLabel) -> fmt::Result {
    let t = s.true_label.metrics;
    let x = s.false_label.metrics;
    writeln!(
        f,
        "{name:<28} {:>5.2} {:>6.2} {:>5.2}   {:>5.2} {:>6.2} {:>5.2}",
        t.precision, t.recall, t.f1, x.precision, x.recall, x.f1
    )
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<28} {:^18}   {:^18}", "", "Label = True", "Label = False")?;
        writeln!(
            f,
            "{:<28} {:>5} {:>6} {:>5}   {:>5} {:>6} {:>5}",
            "", "Prec", "Recall", "F1", "Prec", "Recall", "F1"
        )?;
        for b in &self.baselines {
            metrics_row(f, &b.name, &b.scores)?;
        }
        let name = match self.tau {
            Some(t) => format!("{} {} (tau={t})", self.model_id, self.strategy),
            None => format!("{} {}", self.model_id, self.strategy),
        };
        metrics_row(f, &name, &self.scores)?;
        write!(
            f,
            "items={} scored={} unverifiable={} fallback={} cost={} (llm {} + search {})",
            self.items,
            self.scored,
            self.unverifiable,
            self.fallback_count,
            self.ledger.total_cost,
            self.ledger.llm_cost,
            self.ledger.search_cost
        )
    }
}

/// Checks every record as a single claim and scores the verdicts.
pub fn run_benchmark(
    pipeline: &Pipeline,
    records: &[ClaimRecord],
) -> Result<(MetricsReport, Vec<ClaimEntry>), EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let retrieval = pipeline.config().retrieval;
    retrieval.validate()?;
    let started = pipeline.config().clock.start();
    let claims: Vec<AtomicClaim> = records
        .iter()
        .enumerate()
        .map(|(index, r)| {
            let text = r.claim.trim().to_string();
            AtomicClaim {
                index,
                origin_span: Some((0, text.chars().count())),
                text,
            }
        })
        .collect();
    let run_ledger = pipeline.ledger().child();
    let entries = pipeline
        .with_ledger(run_ledger.clone())
        .check_claims(&claims, &run_ledger);

    let predictions: Vec<Prediction> = entries.iter().map(Prediction::from_entry).collect();
    let gold: Vec<BinaryLabel> = records.iter().map(|r| r.label).collect();
    let scores = PerLabel::compute(&predictions, &gold)?;
    let outcomes: Vec<ItemOutcome> = records
        .iter()
        .zip(&entries)
        .zip(&predictions)
        .map(|((r, e), p)| ItemOutcome {
            id: r.id.clone(),
            gold: r.label,
            predicted: *p,
            fallback_used: e.evidence.as_ref().is_some_and(|ev| ev.fallback_used),
            error: e.error.clone(),
        })
        .collect();
    let unverifiable = scores.true_label.counts.unverifiable as usize;
    let report = MetricsReport {
        schema_version: METRICS_SCHEMA_VERSION,
        model_id: pipeline.model_id().to_string(),
        strategy: retrieval.strategy,
        tau: retrieval.reported_tau(),
        items: records.len(),
        scored: records.len() - unverifiable,
        unverifiable,
        fallback_count: outcomes.iter().filter(|o| o.fallback_used).count(),
        scores,
        ledger: run_ledger.snapshot(),
        wall_clock_ms: Clock::elapsed_ms(started),
        baselines: Vec::new(),
        outcomes,
    };
    info!(items = report.items, unverifiable, cost = %report.ledger.total_cost, "benchmark finished");
    Ok((report, entries))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau: usize,
    pub f1_true: f64,
    pub f1_false: f64,
    pub total_cost: Money,
    pub llm_cost: Money,
    pub search_cost: Money,
    /// Share of items whose retrieval fell back to translated search.
    pub fallback_rate: f64,
    pub unverifiable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub model_id: String,
    pub items: usize,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sweep serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,f1_true,f1_false,total_cost,llm_cost,search_cost,fallback_rate,unverifiable\n");
        for p in &self.points {
            s.push_str(&format!(
                "{},{:.6},{:.6},{:.9},{:.9},{:.9},{:.6},{}\n",
                p.tau,
                p.f1_true,
                p.f1_false,
                p.total_cost.dollars(),
                p.llm_cost.dollars(),
                p.search_cost.dollars(),
                p.fallback_rate,
                p.unverifiable
            ));
        }
        s
    }

    /// Writes `sweep.json`, `sweep.csv` and `sweep.svg` into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<(), EvalError> {
        let io = |path: &Path, source| EvalError::Io {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, body) in [
            ("sweep.json", self.to_json()),
            ("sweep.csv", self.to_csv()),
            ("sweep.svg", render_sweep_svg(self)),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>4} {:>8} {:>8} {:>12} {:>9}",
            "tau", "F1(T)", "F1(F)", "cost", "fallback"
        )?;
        for p in &self.points {
            writeln!(
                f,
                "{:>4} {:>8.3} {:>8.3} {:>12} {:>8.1}%",
                p.tau,
                p.f1_true,
                p.f1_false,
                p.total_cost.to_string(),
                p.fallback_rate * 100.0
            )?;
        }
        Ok(())
    }
}

/// One thresholded benchmark per tau, each on an isolated copy of the
/// pipeline (fresh ledger, empty search cache) so points are comparable.
/// Thresholds are sorted and deduplicated first.
pub fn sweep_threshold(pipeline: &Pipeline, records: &[ClaimRecord], taus: &[usize]) -> Result<SweepReport, EvalError> {
    let mut taus = taus.to_vec();
    taus.sort_unstable();
    taus.dedup();
    if taus.is_empty() {
        return Err(EvalError::NoThresholds);
    }
    if records.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let base = pipeline.config().retrieval;
    let mut points = Vec::with_capacity(taus.len());
    for tau in taus {
        let config = RetrievalConfig {
            strategy: Strategy::Thresholded,
            tau,
            requested_results: base.requested_results,
        };
        let point = pipeline.with_retrieval(config).isolated();
        let (m, _) = run_benchmark(&point, records).map_err(|e| EvalError::SweepPoint {
            tau,
            source: Box::new(e),
        })?;
        info!(tau, f1_true = m.scores.true_label.metrics.f1, cost = %m.ledger.total_cost, "sweep point");
        points.push(SweepPoint {
            tau,
            f1_true: m.scores.true_label.metrics.f1,
            f1_false: m.scores.false_label.metrics.f1,
            total_cost: m.ledger.total_cost,
            llm_cost: m.ledger.llm_cost,
            search_cost: m.ledger.search_cost,
            fallback_rate: m.fallback_count as f64 / m.items as f64,
            unverifiable: m.unverifiable,
        });
    }
    Ok(SweepReport {
        schema_version: SWEEP_SCHEMA_VERSION,
        model_id: pipeline.model_id().to_string(),
        items: records.len(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseOutcome {
    pub id: String,
    pub claims: usize,
    pub true_claims: usize,
    pub false_claims: usize,
    pub unverifiable_claims: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactualityReport {
    pub schema_version: u32,
    /// The model whose answers were checked.
    pub model_id: String,
    /// The model that checked them.
    pub verifier_model_id: String,
    pub percent_true_claims: f64,
    pub percent_false_claims: f64,
    pub percent_unverifiable_claims: f64,
    pub true_claim_count: usize,
    pub false_claim_count: usize,
    pub unverifiable_claim_count: usize,
    pub total_claims: usize,
    pub cost: LedgerSnapshot,
    pub responses: Vec<ResponseOutcome>,
}

impl FactualityReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

impl fmt::Display for FactualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {:.1}% true claims, {} false, {} unverifiable, {} claims total, cost {}",
            self.model_id,
            self.percent_true_claims * 100.0,
            self.false_claim_count,
            self.unverifiable_claim_count,
            self.total_claims,
            self.cost.total_cost
        )
    }
}

/// Reads answers keyed by question id, either as a JSON object
/// `{"id": "answer"}` or as JSONL lines `{"id": ..., "response": ...}`.
pub fn load_responses(path: &Path) -> Result<HashMap<String, String>, EvalError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: display.clone(),
        source,
    })?;
    let bad = |message: String| EvalError::Responses {
        path: display.clone(),
        message,
    };
    if let Ok(map) = serde_json::from_str::<HashMap<String, String>>(&text) {
        return Ok(map);
    }
    #[derive(Deserialize)]
    struct Line {
        id: String,
        #[serde(alias = "answer")]
        response: String,
    }
    let mut out = HashMap::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let parsed: Line = serde_json::from_str(line).map_err(|e| bad(format!("line {}: {e}", n + 1)))?;
        if out.insert(parsed.id.clone(), parsed.response).is_some() {
            return Err(bad(format!("line {}: duplicate id {:?}", n + 1, parsed.id)));
        }
    }
    Ok(out)
}

/// Decomposes each answer into claims and verifies them. Fractions are over
/// all extracted claims, so true + false + unverifiable = 1.
pub fn evaluate_llm_factuality(
    pipeline: &Pipeline,
    qa: &[QaRecord],
    responses: &HashMap<String, String>,
    model_id: &str,
) -> Result<FactualityReport, EvalError> {
    if qa.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut missing: Vec<String> = qa
        .iter()
        .filter(|q| !responses.contains_key(&q.id))
        .map(|q| q.id.clone())
        .collect();
    if !missing.is_empty() {
        missing.sort();
        let mut seen = HashSet::new();
        missing.retain(|id| seen.insert(id.clone()));
        return Err(EvalError::MissingResponses(missing));
    }
    let ledger = pipeline.ledger().child();
    let scoped = pipeline.with_ledger(ledger.clone());
    let mut outcomes = Vec::with_capacity(qa.len());
    for q in qa {
        let answer = &responses[&q.id];
        let mut outcome = ResponseOutcome {
            id: q.id.clone(),
            claims: 0,
            true_claims: 0,
            false_claims: 0,
            unverifiable_claims: 0,
            error: None,
        };
        match scoped.run(answer, Mode::Free) {
            Ok(report) => {
                for entry in &report.claims {
                    match Prediction::from_entry(entry) {
                        Prediction::True => outcome.true_claims += 1,
                        Prediction::False => outcome.false_claims += 1,
                        Prediction::Unverifiable => outcome.unverifiable_claims += 1,
                    }
                }
                outcome.claims = report.claims.len();
                if outcome.claims == 0 {
                    info!(id = %q.id, "response has no check-worthy claims");
                }
            }
            Err(e) => {
                warn!(id = %q.id, error = %e, "could not check response");
                outcome.error = Some(e.to_string());
            }
        }
        outcomes.push(outcome);
    }
    let total: usize = outcomes.iter().map(|o| o.claims).sum();
    let t: usize = outcomes.iter().map(|o| o.true_claims).sum();
    let x: usize = outcomes.iter().map(|o| o.false_claims).sum();
    let u: usize = outcomes.iter().map(|o| o.unverifiable_claims).sum();
    let frac = |n: usize| ratio(n as f64, total as f64);
    Ok(FactualityReport {
        schema_version: FACTUALITY_SCHEMA_VERSION,
        model_id: model_id.to_string(),
        verifier_model_id: pipeline.model_id().to_string(),
        percent_true_claims: frac(t),
        percent_false_claims: frac(x),
        percent_unverifiable_claims: frac(u),
        true_claim_count: t,
        false_claim_count: x,
        unverifiable_claim_count: u,
        total_claims: total,
        cost: ledger.snapshot(),
        responses: outcomes,
    })
}
