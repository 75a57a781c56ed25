//! Token and search-query spend accounting.
//!
//! Amounts are held as integer picodollars so that totals are exact and do
//! not depend on the order in which concurrent workers record their calls.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const PICOS_PER_DOLLAR: f64 = 1e12;

/// Default price of one billed web-search request, in dollars.
pub const DEFAULT_SEARCH_UNIT_COST: f64 = 0.00105;

/// A non-negative currency amount with picodollar resolution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(u64);

impl Money {
    pub const ZERO: Money = Money(0);

    /// Rounds `dollars` to the nearest picodollar. Negative and non-finite
    /// inputs clamp to zero.
    pub fn from_dollars(dollars: f64) -> Self {
        if !dollars.is_finite() || dollars <= 0.0 {
            return Money(0);
        }
        Money((dollars * PICOS_PER_DOLLAR).round() as u64)
    }

    pub fn from_picos(picos: u64) -> Self {
        Money(picos)
    }

    pub fn picos(self) -> u64 {
        self.0
    }

    pub fn dollars(self) -> f64 {
        self.0 as f64 / PICOS_PER_DOLLAR
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Mul<u64> for Money {
    type Output = Money;
    fn mul(self, rhs: u64) -> Money {
        Money(self.0 * rhs)
    }
}

impl std::iter::Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${:.5}", self.dollars())
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.dollars())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let dollars = f64::deserialize(d)?;
        if dollars < 0.0 {
            return Err(serde::de::Error::custom("negative amount"));
        }
        Ok(Money::from_dollars(dollars))
    }
}

/// Per-token prices for one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPricing {
    pub input_per_token: Money,
    pub output_per_token: Money,
}

impl ModelPricing {
    pub fn new(input_per_token: f64, output_per_token: f64) -> Self {
        Self {
            input_per_token: Money::from_dollars(input_per_token),
            output_per_token: Money::from_dollars(output_per_token),
        }
    }

    pub fn cost(&self, input_tokens: u64, output_tokens: u64) -> Money {
        self.input_per_token * input_tokens + self.output_per_token * output_tokens
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PricingError {
    #[error("cannot read pricing table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid pricing table {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Model prices plus the unit cost of a search request.
///
/// File layout:
///
/// ```json
/// {
///   "search_per_query": 0.00105,
///   "models": { "gpt-4o-mini": { "input_per_token": 1.5e-7, "output_per_token": 6e-7 } }
/// }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PricingTable {
    #[serde(default = "default_search_cost")]
    pub search_per_query: Money,
    #[serde(default)]
    pub models: HashMap<String, ModelPricing>,
}

fn default_search_cost() -> Money {
    Money::from_dollars(DEFAULT_SEARCH_UNIT_COST)
}

impl Default for PricingTable {
    fn default() -> Self {
        Self {
            search_per_query: default_search_cost(),
            models: HashMap::new(),
        }
    }
}

impl PricingTable {
    pub fn load(path: &Path) -> Result<Self, PricingError> {
        let text = std::fs::read_to_string(path).map_err(|source| PricingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| PricingError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn with_model(mut self, model_id: impl Into<String>, pricing: ModelPricing) -> Self {
        self.models.insert(model_id.into(), pricing);
        self
    }

    pub fn model(&self, model_id: &str) -> Option<&ModelPricing> {
        self.models.get(model_id)
    }
}

/// Aggregate spend at one point in time.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub llm_cost: Money,
    pub search_cost: Money,
    pub total_cost: Money,
    pub llm_calls: u64,
    pub search_calls: u64,
    pub search_cache_hits: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// Completed LLM calls keyed by prompt template name.
    pub llm_calls_by_template: BTreeMap<String, u64>,
    /// Billed searches keyed by query language.
    pub search_calls_by_language: BTreeMap<String, u64>,
}

impl LedgerSnapshot {
    pub fn calls_for_template(&self, template: &str) -> u64 {
        self.llm_calls_by_template.get(template).copied().unwrap_or(0)
    }

    pub fn searches_in(&self, language: &str) -> u64 {
        self.search_calls_by_language.get(language).copied().unwrap_or(0)
    }
}

/// Shared, thread-safe spend accumulator.
///
/// A child ledger records into itself and every ancestor, which lets a run
/// or a single claim keep its own totals while the gateway-wide ledger keeps
/// the grand total.
#[derive(Debug, Clone, Default)]
pub struct CostLedger {
    inner: Arc<Mutex<LedgerSnapshot>>,
    parent: Option<Box<CostLedger>>,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn child(&self) -> Self {
        Self {
            inner: Arc::default(),
            parent: Some(Box::new(self.clone())),
        }
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        self.inner.lock().expect("ledger poisoned").clone()
    }

    pub fn record_llm(&self, template: &str, input_tokens: u64, output_tokens: u64, cost: Money) {
        self.apply(&|s: &mut LedgerSnapshot| {
            s.llm_calls += 1;
            s.input_tokens += input_tokens;
            s.output_tokens += output_tokens;
            s.llm_cost += cost;
            s.total_cost += cost;
            *s.llm_calls_by_template.entry(template.to_string()).or_default() += 1;
        });
    }

    pub fn record_search(&self, language: &str, cost: Money) {
        self.apply(&|s: &mut LedgerSnapshot| {
            s.search_calls += 1;
            s.search_cost += cost;
            s.total_cost += cost;
            *s.search_calls_by_language.entry(language.to_string()).or_default() += 1;
        });
    }

    pub fn record_cache_hit(&self) {
        self.apply(&|s: &mut LedgerSnapshot| s.search_cache_hits += 1);
    }

    fn apply(&self, update: &dyn Fn(&mut LedgerSnapshot)) {
        update(&mut self.inner.lock().expect("ledger poisoned"));
        if let Some(parent) = &self.parent {
            parent.apply(update);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pricing_arithmetic() {
        let pricing = ModelPricing::new(1e-6, 2e-6);
        let cost = pricing.cost(1000, 500);
        assert!((cost.dollars() - 0.002).abs() < 1e-12);
        assert_eq!(pricing.cost(0, 0), Money::ZERO);
    }

    #[test]
    fn search_unit_cost_scales_exactly() {
        let unit = Money::from_dollars(DEFAULT_SEARCH_UNIT_COST);
        assert_eq!((unit * 100).dollars(), 0.105);
    }

    #[test]
    fn child_records_propagate_to_parent() {
        let root = CostLedger::new();
        let run = root.child();
        let claim = run.child();
        claim.record_search("ur", Money::from_dollars(0.5));
        claim.record_llm("verification", 10, 5, Money::from_dollars(0.25));
        run.record_cache_hit();
        for snap in [root.snapshot(), run.snapshot()] {
            assert_eq!(snap.search_calls, 1);
            assert_eq!(snap.llm_calls, 1);
            assert_eq!(snap.total_cost, Money::from_dollars(0.75));
        }
        assert_eq!(claim.snapshot().search_cache_hits, 0);
        assert_eq!(root.snapshot().search_cache_hits, 1);
    }

    #[test]
    fn pricing_table_parses() {
        let table: PricingTable =
            serde_json::from_str(r#"{"models": {"m": {"input_per_token": 1e-6, "output_per_token": 2e-6}}}"#).unwrap();
        assert_eq!(table.search_per_query, Money::from_dollars(0.00105));
        assert_eq!(table.model("m").unwrap().cost(1000, 500), Money::from_dollars(0.002));
    }

    proptest! {
        #[test]
        fn ledger_is_additive(
            usage in prop::collection::vec((0u64..100_000, 0u64..100_000), 0..40),
            price_in in 0.0f64..1e-4,
            price_out in 0.0f64..1e-4,
        ) {
            let pricing = ModelPricing::new(price_in, price_out);
            let ledger = CostLedger::new();
            let mut expected = 0.0f64;
            for (i, o) in &usage {
                let cost = pricing.cost(*i, *o);
                expected += cost.dollars();
                ledger.record_llm("t", *i, *o, cost);
            }
            let snap = ledger.snapshot();
            prop_assert!((snap.llm_cost.dollars() - expected).abs() <= 1e-9);
            prop_assert_eq!(snap.llm_calls, usage.len() as u64);
            prop_assert_eq!(snap.total_cost, snap.llm_cost + snap.search_cost);
        }
    }
}
