//! Claim-verification and QA dataset records: loading, label
//! standardization, class balancing and summary statistics.
//!
//! Files are JSON Lines, UTF-8, one record per line. Claim lines carry
//! `id`, `claim`, `label` (`"true"`/`"false"`), `source` and optionally
//! `original_label`; QA lines carry `id`, `question`, `source` and
//! optionally `reference_answer`. Blank lines are ignored.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Four-way label used by the source English benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceLabel {
    Supported,
    PartiallySupported,
    NotSupported,
    Refuted,
}

impl FromStr for SourceLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .to_lowercase()
            .chars()
            .map(|c| if c == '_' || c == ' ' { '-' } else { c })
            .collect();
        match key.as_str() {
            "supported" => Ok(Self::Supported),
            "partially-supported" => Ok(Self::PartiallySupported),
            "not-supported" => Ok(Self::NotSupported),
            "refuted" => Ok(Self::Refuted),
            _ => Err(format!("unknown source label {s:?}")),
        }
    }
}

impl SourceLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Supported => "supported",
            Self::PartiallySupported => "partially-supported",
            Self::NotSupported => "not-supported",
            Self::Refuted => "refuted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryLabel {
    True,
    False,
}

impl BinaryLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::True => "true",
            Self::False => "false",
        }
    }

    pub fn other(self) -> Self {
        match self {
            Self::True => Self::False,
            Self::False => Self::True,
        }
    }
}

impl From<bool> for BinaryLabel {
    fn from(b: bool) -> Self {
        if b {
            Self::True
        } else {
            Self::False
        }
    }
}

impl FromStr for BinaryLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "true" => Ok(Self::True),
            "false" => Ok(Self::False),
            _ => Err(format!("expected \"true\" or \"false\", got {s:?}")),
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps the four-way scheme onto the binary one. `None` means the record
/// is dropped.
pub fn standardize_label(original: SourceLabel) -> Option<BinaryLabel> {
    match original {
        SourceLabel::Supported | SourceLabel::PartiallySupported => Some(BinaryLabel::True),
        SourceLabel::Refuted => Some(BinaryLabel::False),
        SourceLabel::NotSupported => None,
    }
}

fn source_key(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimSource {
    FactcheckBench,
    FactoolQa,
    Bingcheck,
    Other,
}

impl ClaimSource {
    /// Unknown names map to `Other`.
    pub fn parse(s: &str) -> Self {
        match source_key(s).as_str() {
            "factcheckbench" => Self::FactcheckBench,
            "factoolqa" => Self::FactoolQa,
            "bingcheck" => Self::Bingcheck,
            _ => Self::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::FactcheckBench => "factcheck-bench",
            Self::FactoolQa => "factool-qa",
            Self::Bingcheck => "bingcheck",
            Self::Other => "other",
        }
    }
}

impl<'de> Deserialize<'de> for ClaimSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Self::parse(&String::deserialize(d)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QaSource {
    Simpleqa,
    Freshqa,
    Other,
}

impl QaSource {
    pub fn parse(s: &str) -> Self {
        match source_key(s).as_str() {
            "simpleqa" => Self::Simpleqa,
            "freshqa" => Self::Freshqa,
            _ => Self::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Simpleqa => "simpleqa",
            Self::Freshqa => "freshqa",
            Self::Other => "other",
        }
    }
}

impl<'de> Deserialize<'de> for QaSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Self::parse(&String::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub id: String,
    pub claim: String,
    pub label: BinaryLabel,
    pub source: ClaimSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_label: Option<SourceLabel>,
}

/// A claim still carrying its four-way label, before standardization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceClaimRecord {
    pub id: String,
    pub claim: String,
    pub label: SourceLabel,
    pub source: ClaimSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRecord {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_answer: Option<String>,
    pub source: QaSource,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("{path}:{line}: missing field `{field}`")]
    MissingField {
        path: String,
        line: usize,
        field: &'static str,
    },
    #[error("{path}:{line}: invalid `{field}`: {message}")]
    InvalidField {
        path: String,
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("{path}:{line}: duplicate id `{id}`")]
    DuplicateId { path: String, line: usize, id: String },
}

struct LineCtx<'a> {
    path: &'a str,
    line: usize,
    obj: serde_json::Map<String, Value>,
}

impl LineCtx<'_> {
    fn text(&self, field: &'static str, required: bool) -> Result<Option<String>, DatasetError> {
        match self.obj.get(field) {
            None | Some(Value::Null) if required => Err(DatasetError::MissingField {
                path: self.path.to_string(),
                line: self.line,
                field,
            }),
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => {
                if required && s.trim().is_empty() {
                    return Err(self.invalid(field, "must not be empty".into()));
                }
                Ok(Some(s.clone()))
            }
            Some(Value::Number(n)) if field == "id" => Ok(Some(n.to_string())),
            Some(Value::Bool(b)) if field == "label" => Ok(Some(b.to_string())),
            Some(other) => Err(self.invalid(field, format!("expected a string, got {other}"))),
        }
    }

    fn required(&self, field: &'static str) -> Result<String, DatasetError> {
        Ok(self.text(field, true)?.expect("required field present"))
    }

    fn invalid(&self, field: &'static str, message: String) -> DatasetError {
        DatasetError::InvalidField {
            path: self.path.to_string(),
            line: self.line,
            field,
            message,
        }
    }
}

fn read_lines(path: &Path) -> Result<(String, Vec<(usize, String)>), DatasetError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: display.clone(),
        source,
    })?;
    let lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect();
    Ok((display, lines))
}

fn parse_objects<T>(
    path: &Path,
    mut build: impl FnMut(&LineCtx<'_>) -> Result<T, DatasetError>,
    id_of: impl Fn(&T) -> &str,
) -> Result<Vec<T>, DatasetError> {
    let (display, lines) = read_lines(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(lines.len());
    for (line, raw) in lines {
        let obj = match serde_json::from_str::<Value>(&raw) {
            Ok(Value::Object(obj)) => obj,
            Ok(_) => {
                return Err(DatasetError::Malformed {
                    path: display,
                    line,
                    message: "expected a JSON object".into(),
                })
            }
            Err(e) => {
                return Err(DatasetError::Malformed {
                    path: display,
                    line,
                    message: e.to_string(),
                })
            }
        };
        let ctx = LineCtx {
            path: &display,
            line,
            obj,
        };
        let record = build(&ctx)?;
        let id = id_of(&record).to_string();
        if !seen.insert(id.clone()) {
            return Err(DatasetError::DuplicateId {
                path: display,
                line,
                id,
            });
        }
        out.push(record);
    }
    Ok(out)
}

/// Loads standardized claim records in file order.
pub fn load_claims(path: &Path) -> Result<Vec<ClaimRecord>, DatasetError> {
    parse_objects(
        path,
        |ctx| {
            let id = ctx.required("id")?;
            let claim = ctx.required("claim")?;
            let label_text = ctx.required("label")?;
            let label = label_text.parse::<BinaryLabel>().map_err(|m| ctx.invalid("label", m))?;
            let source = ctx
                .text("source", false)?
                .map(|s| ClaimSource::parse(&s))
                .unwrap_or(ClaimSource::Other);
            let original_label = ctx
                .text("original_label", false)?
                .map(|s| s.parse::<SourceLabel>().map_err(|m| ctx.invalid("original_label", m)))
                .transpose()?;
            Ok(ClaimRecord {
                id,
                claim,
                label,
                source,
                original_label,
            })
        },
        |r| &r.id,
    )
}

/// Loads claims labelled with the four-way scheme.
pub fn load_source_claims(path: &Path) -> Result<Vec<SourceClaimRecord>, DatasetError> {
    parse_objects(
        path,
        |ctx| {
            let id = ctx.required("id")?;
            let claim = ctx.required("claim")?;
            let label = ctx
                .required("label")?
                .parse::<SourceLabel>()
                .map_err(|m| ctx.invalid("label", m))?;
            let source = ctx
                .text("source", false)?
                .map(|s| ClaimSource::parse(&s))
                .unwrap_or(ClaimSource::Other);
            Ok(SourceClaimRecord {
                id,
                claim,
                label,
                source,
            })
        },
        |r| &r.id,
    )
}

pub fn load_qa(path: &Path) -> Result<Vec<QaRecord>, DatasetError> {
    parse_objects(
        path,
        |ctx| {
            Ok(QaRecord {
                id: ctx.required("id")?,
                question: ctx.required("question")?,
                reference_answer: ctx.text("reference_answer", false)?,
                source: ctx
                    .text("source", false)?
                    .map(|s| QaSource::parse(&s))
                    .unwrap_or(QaSource::Other),
            })
        },
        |r| &r.id,
    )
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for record in records {
        let line = serde_json::to_string(record).expect("records serialize");
        writeln!(file, "{line}").map_err(io_err)?;
    }
    file.flush().map_err(io_err)
}

/// Applies [`standardize_label`] to every record, keeping the original
/// label for provenance. Returns the kept records and the number dropped.
pub fn standardize_records(records: &[SourceClaimRecord]) -> (Vec<ClaimRecord>, usize) {
    let mut dropped = 0;
    let kept = records
        .iter()
        .filter_map(|r| match standardize_label(r.label) {
            Some(label) => Some(ClaimRecord {
                id: r.id.clone(),
                claim: r.claim.clone(),
                label,
                source: r.source,
                original_label: Some(r.label),
            }),
            None => {
                dropped += 1;
                None
            }
        })
        .collect();
    (kept, dropped)
}

/// Uniform integer in `[0, bound)` by rejection, so the result does not
/// depend on any library's range-sampling algorithm.
fn uniform_below(rng: &mut SplitMix64, bound: u64) -> u64 {
    let zone = (u64::MAX / bound) * bound;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}

/// Keeps every record of the minority label and at most `cap` records of
/// `majority`, preserving input order.
///
/// The majority subset is chosen with SplitMix64 seeded by `seed`: a
/// partial Fisher-Yates shuffle over majority positions `0..n`, where step
/// `i` swaps position `i` with `i + (x mod (n - i))` and `x` is the first
/// SplitMix64 output below the largest multiple of `n - i`. The first
/// `min(cap, n)` positions after the shuffle are kept.
pub fn balance_sample(records: &[ClaimRecord], majority: BinaryLabel, cap: usize, seed: u64) -> Vec<ClaimRecord> {
    let majority_positions: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.label == majority)
        .map(|(i, _)| i)
        .collect();
    let n = majority_positions.len();
    let take = cap.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::seed_from_u64(seed);
    for i in 0..take {
        let j = i + uniform_below(&mut rng, (n - i) as u64) as usize;
        order.swap(i, j);
    }
    let mut keep = vec![false; records.len()];
    for &k in &order[..take] {
        keep[majority_positions[k]] = true;
    }
    records
        .iter()
        .enumerate()
        .filter(|(i, r)| r.label != majority || keep[*i])
        .map(|(_, r)| r.clone())
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimCounts {
    #[serde(rename = "true")]
    pub true_count: usize,
    #[serde(rename = "false")]
    pub false_count: usize,
    pub total: usize,
}

impl ClaimCounts {
    fn add(&mut self, label: BinaryLabel) {
        match label {
            BinaryLabel::True => self.true_count += 1,
            BinaryLabel::False => self.false_count += 1,
        }
        self.total += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimSourceSummary {
    pub source: ClaimSource,
    #[serde(flatten)]
    pub counts: ClaimCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaSourceSummary {
    pub source: QaSource,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub schema_version: u32,
    pub claims: Vec<ClaimSourceSummary>,
    pub claim_totals: ClaimCounts,
    pub qa: Vec<QaSourceSummary>,
    pub qa_total: usize,
}

impl Default for DatasetSummary {
    fn default() -> Self {
        Self {
            schema_version: SUMMARY_SCHEMA_VERSION,
            claims: Vec::new(),
            claim_totals: ClaimCounts::default(),
            qa: Vec::new(),
            qa_total: 0,
        }
    }
}

impl DatasetSummary {
    pub fn from_records(claims: &[ClaimRecord], qa: &[QaRecord]) -> Self {
        let mut per_claim: BTreeMap<ClaimSource, ClaimCounts> = BTreeMap::new();
        let mut totals = ClaimCounts::default();
        for r in claims {
            per_claim.entry(r.source).or_default().add(r.label);
            totals.add(r.label);
        }
        let mut per_qa: BTreeMap<QaSource, usize> = BTreeMap::new();
        for r in qa {
            *per_qa.entry(r.source).or_default() += 1;
        }
        Self {
            schema_version: SUMMARY_SCHEMA_VERSION,
            claims: per_claim
                .into_iter()
                .map(|(source, counts)| ClaimSourceSummary { source, counts })
                .collect(),
            claim_totals: totals,
            qa_total: qa.len(),
            qa: per_qa
                .into_iter()
                .map(|(source, size)| QaSourceSummary { source, size })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FileKind {
    Claims,
    Qa,
    Empty,
}

fn sniff(path: &Path) -> Result<FileKind, DatasetError> {
    let (display, lines) = read_lines(path)?;
    let Some((line, first)) = lines.first() else {
        return Ok(FileKind::Empty);
    };
    match serde_json::from_str::<Value>(first) {
        Ok(Value::Object(obj)) if obj.contains_key("question") => Ok(FileKind::Qa),
        Ok(Value::Object(_)) => Ok(FileKind::Claims),
        Ok(_) => Err(DatasetError::Malformed {
            path: display,
            line: *line,
            message: "expected a JSON object".into(),
        }),
        Err(e) => Err(DatasetError::Malformed {
            path: display,
            line: *line,
            message: e.to_string(),
        }),
    }
}

/// Summarizes a mix of claim and QA files. The kind of each file is taken
/// from its first record.
pub fn summarize<P: AsRef<Path>>(files: &[P]) -> Result<DatasetSummary, DatasetError> {
    let mut claims = Vec::new();
    let mut qa = Vec::new();
    for file in files {
        let path = file.as_ref();
        match sniff(path)? {
            FileKind::Claims => claims.extend(load_claims(path)?),
            FileKind::Qa => qa.extend(load_qa(path)?),
            FileKind::Empty => {}
        }
    }
    Ok(DatasetSummary::from_records(&claims, &qa))
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.claims.is_empty() || self.qa.is_empty() {
            writeln!(f, "{:<20}{:>8}{:>8}{:>8}", "Dataset", "#True", "#False", "Total")?;
            writeln!(f, "{}", "-".repeat(44))?;
            for row in &self.claims {
                writeln!(
                    f,
                    "{:<20}{:>8}{:>8}{:>8}",
                    row.source.as_str(),
                    row.counts.true_count,
                    row.counts.false_count,
                    row.counts.total
                )?;
            }
            writeln!(f, "{}", "-".repeat(44))?;
            writeln!(
                f,
                "{:<20}{:>8}{:>8}{:>8}",
                "total", self.claim_totals.true_count, self.claim_totals.false_count, self.claim_totals.total
            )?;
        }
        if !self.qa.is_empty() {
            if !self.claims.is_empty() {
                writeln!(f)?;
            }
            writeln!(f, "{:<20}{:>8}", "Dataset", "Size")?;
            writeln!(f, "{}", "-".repeat(28))?;
            for row in &self.qa {
                writeln!(f, "{:<20}{:>8}", row.source.as_str(), row.size)?;
            }
            writeln!(f, "{}", "-".repeat(28))?;
            writeln!(f, "{:<20}{:>8}", "total", self.qa_total)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn claim(id: usize, label: BinaryLabel) -> ClaimRecord {
        ClaimRecord {
            id: format!("c{id}"),
            claim: format!("دعویٰ {id}"),
            label,
            source: ClaimSource::Bingcheck,
            original_label: None,
        }
    }

    fn write_file(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn standardization_table() {
        assert_eq!(standardize_label(SourceLabel::Supported), Some(BinaryLabel::True));
        assert_eq!(
            standardize_label(SourceLabel::PartiallySupported),
            Some(BinaryLabel::True)
        );
        assert_eq!(standardize_label(SourceLabel::Refuted), Some(BinaryLabel::False));
        assert_eq!(standardize_label(SourceLabel::NotSupported), None);
    }

    #[test]
    fn source_label_parse_is_case_insensitive() {
        assert_eq!("Partially Supported".parse(), Ok(SourceLabel::PartiallySupported));
        assert_eq!("NOT_SUPPORTED".parse(), Ok(SourceLabel::NotSupported));
        assert!("maybe".parse::<SourceLabel>().is_err());
        assert_eq!(
            serde_json::to_string(&SourceLabel::PartiallySupported).unwrap(),
            "\"partially-supported\""
        );
    }

    #[test]
    fn binary_label_serializes_lowercase() {
        assert_eq!(serde_json::to_string(&BinaryLabel::True).unwrap(), "\"true\"");
        assert_eq!(serde_json::to_string(&BinaryLabel::False).unwrap(), "\"false\"");
    }

    #[test]
    fn unknown_source_becomes_other() {
        assert_eq!(ClaimSource::parse("FacTool-QA"), ClaimSource::FactoolQa);
        assert_eq!(ClaimSource::parse("x-fact"), ClaimSource::Other);
        assert_eq!(QaSource::parse("FreshQA"), QaSource::Freshqa);
    }

    #[test]
    fn balance_keeps_minority_and_caps_majority() {
        let mut records: Vec<_> = (0..3581).map(|i| claim(i, BinaryLabel::True)).collect();
        records.extend((3581..3623).map(|i| claim(i, BinaryLabel::False)));
        let out = balance_sample(&records, BinaryLabel::True, 100, 7);
        assert_eq!(out.len(), 142);
        assert_eq!(out.iter().filter(|r| r.label == BinaryLabel::True).count(), 100);
        assert_eq!(out.iter().filter(|r| r.label == BinaryLabel::False).count(), 42);
        let positions: Vec<usize> = out
            .iter()
            .map(|r| records.iter().position(|x| x.id == r.id).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn balance_cap_above_supply_keeps_all() {
        let records: Vec<_> = (0..20)
            .map(|i| {
                claim(
                    i,
                    if i % 2 == 0 {
                        BinaryLabel::True
                    } else {
                        BinaryLabel::False
                    },
                )
            })
            .collect();
        assert_eq!(balance_sample(&records, BinaryLabel::True, 100, 1), records);
    }

    #[test]
    fn balance_is_seed_deterministic() {
        let records: Vec<_> = (0..500).map(|i| claim(i, BinaryLabel::True)).collect();
        let a = balance_sample(&records, BinaryLabel::True, 50, 42);
        let b = balance_sample(&records, BinaryLabel::True, 50, 42);
        let c = balance_sample(&records, BinaryLabel::True, 50, 43);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn loads_records_in_order() {
        let f = write_file(&[
            r#"{"id":"a","claim":"ایک","label":"true","source":"bingcheck"}"#,
            r#"{"id":"b","claim":"دو","label":"false","source":"factcheck-bench"}"#,
            "",
            r#"{"id":"c","claim":"تین","label":"TRUE","source":"somewhere"}"#,
        ]);
        let records = load_claims(f.path()).unwrap();
        let ids: Vec<_> = records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(records[2].source, ClaimSource::Other);
        assert_eq!(records[2].label, BinaryLabel::True);
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let f = write_file(&[
            r#"{"id":"a","claim":"ایک","label":"true"}"#,
            r#"{"id":"a","claim":"دو","label":"false"}"#,
        ]);
        let err = load_claims(f.path()).unwrap_err();
        assert!(matches!(&err, DatasetError::DuplicateId { id, line: 2, .. } if id == "a"));
        assert!(err.to_string().contains("`a`"));
    }

    #[test]
    fn missing_label_names_field_and_line() {
        let f = write_file(&[
            r#"{"id":"a","claim":"ایک","label":"true"}"#,
            r#"{"id":"b","claim":"دو"}"#,
        ]);
        let err = load_claims(f.path()).unwrap_err();
        assert!(matches!(
            err,
            DatasetError::MissingField {
                field: "label",
                line: 2,
                ..
            }
        ));
    }

    #[test]
    fn empty_claim_text_is_rejected() {
        let f = write_file(&[r#"{"id":"a","claim":"  ","label":"true"}"#]);
        assert!(matches!(
            load_claims(f.path()).unwrap_err(),
            DatasetError::InvalidField { field: "claim", .. }
        ));
    }

    #[test]
    fn malformed_line_reports_position() {
        let f = write_file(&[r#"{"id":"a","claim":"x","label":"true"}"#, "{not json"]);
        let err = summarize(&[f.path()]).unwrap_err();
        assert!(matches!(err, DatasetError::Malformed { line: 2, .. }));
        assert!(err.to_string().contains(&f.path().display().to_string()));
    }

    #[test]
    fn empty_file_summarizes_to_zero() {
        let f = write_file(&[]);
        let s = summarize(&[f.path()]).unwrap();
        assert_eq!(s, DatasetSummary::default());
        assert!(s.to_string().contains("total"));
    }

    #[test]
    fn summarizes_claims_and_qa() {
        let claims = write_file(&[
            r#"{"id":"a","claim":"x","label":"true","source":"bingcheck"}"#,
            r#"{"id":"b","claim":"y","label":"false","source":"bingcheck"}"#,
        ]);
        let qa = write_file(&[r#"{"id":"q1","question":"کیا؟","source":"freshqa"}"#]);
        let s = summarize(&[claims.path(), qa.path()]).unwrap();
        assert_eq!(s.claim_totals.total, 2);
        assert_eq!(s.qa_total, 1);
        assert_eq!(s.qa[0].source, QaSource::Freshqa);
        let table = s.to_string();
        assert!(table.contains("bingcheck"));
        assert!(table.contains("freshqa"));
    }

    fn arb_source() -> impl Strategy<Value = ClaimSource> {
        prop_oneof![
            Just(ClaimSource::FactcheckBench),
            Just(ClaimSource::FactoolQa),
            Just(ClaimSource::Bingcheck),
            Just(ClaimSource::Other),
        ]
    }

    proptest! {
        #[test]
        fn summary_totals_are_additive(rows in prop::collection::vec((arb_source(), any::<bool>()), 0..300)) {
            let records: Vec<ClaimRecord> = rows
                .iter()
                .enumerate()
                .map(|(i, (source, t))| ClaimRecord {
                    id: i.to_string(),
                    claim: "x".into(),
                    label: BinaryLabel::from(*t),
                    source: *source,
                    original_label: None,
                })
                .collect();
            let s = DatasetSummary::from_records(&records, &[]);
            let mut sum = 0;
            for row in &s.claims {
                prop_assert_eq!(row.counts.true_count + row.counts.false_count, row.counts.total);
                sum += row.counts.total;
            }
            prop_assert_eq!(sum, s.claim_totals.total);
            prop_assert_eq!(s.claim_totals.total, records.len());
        }

        #[test]
        fn balance_output_size(n_true in 0usize..200, n_false in 0usize..200, cap in 0usize..300, seed: u64) {
            let mut records: Vec<_> = (0..n_true).map(|i| claim(i, BinaryLabel::True)).collect();
            records.extend((n_true..n_true + n_false).map(|i| claim(i, BinaryLabel::False)));
            let out = balance_sample(&records, BinaryLabel::True, cap, seed);
            prop_assert_eq!(out.len(), n_false + cap.min(n_true));
            prop_assert_eq!(out.clone(), balance_sample(&records, BinaryLabel::True, cap, seed));
        }
    }
}
