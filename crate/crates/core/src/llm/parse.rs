//! Structured-output parsing with a single repair pass.
//!
//! Models are asked for JSON. The parser first tries the reply as-is, then
//! strips Markdown code fences and takes the first well-formed JSON value of
//! the expected kind found anywhere in the text. Nothing else is attempted.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::datasets::BinaryLabel;
use crate::prompt::OutputShape;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{reason}")]
pub struct ParseError {
    pub reason: String,
    /// The unmodified model output, kept for logs.
    pub raw: String,
}

impl ParseError {
    fn new(reason: impl Into<String>, raw: &str) -> Self {
        Self {
            reason: reason.into(),
            raw: raw.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub label: BinaryLabel,
    pub reasoning: String,
    pub error: Option<String>,
    pub correction: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Structured {
    Text(String),
    List(Vec<String>),
    Judgment(Judgment),
}

pub fn parse_structured(text: &str, shape: OutputShape) -> Result<Structured, ParseError> {
    match shape {
        OutputShape::FreeText => {
            let t = text.trim();
            if t.is_empty() {
                Err(ParseError::new("empty output", text))
            } else {
                Ok(Structured::Text(t.to_string()))
            }
        }
        OutputShape::ItemizedList => parse_list(text).map(Structured::List),
        OutputShape::LabeledJudgment => parse_judgment(text).map(Structured::Judgment),
    }
}

pub fn parse_list(text: &str) -> Result<Vec<String>, ParseError> {
    parse_with(text, b'[', list_from_value)
}

pub fn parse_judgment(text: &str) -> Result<Judgment, ParseError> {
    parse_with(text, b'{', judgment_from_value)
}

fn parse_with<T>(text: &str, opener: u8, interpret: impl Fn(&Value) -> Result<T, String>) -> Result<T, ParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ParseError::new("empty output", text));
    }
    let mut first_problem = None;
    if let Ok(value) = serde_json::from_str::<Value>(trimmed) {
        match interpret(&value) {
            Ok(v) => return Ok(v),
            Err(e) => first_problem = Some(e),
        }
    }
    let unfenced = strip_fences(trimmed);
    for start in unfenced
        .bytes()
        .enumerate()
        .filter(|(_, b)| *b == opener)
        .map(|(i, _)| i)
    {
        let mut stream = serde_json::Deserializer::from_str(&unfenced[start..]).into_iter::<Value>();
        if let Some(Ok(value)) = stream.next() {
            match interpret(&value) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    first_problem.get_or_insert(e);
                }
            }
        }
    }
    let reason = first_problem.unwrap_or_else(|| "no well-formed JSON value found".to_string());
    Err(ParseError::new(reason, text))
}

fn strip_fences(text: &str) -> &str {
    let Some(open) = text.find("```") else {
        return text;
    };
    let after = &text[open + 3..];
    // Skip an info string such as `json`.
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    }
}

fn list_from_value(value: &Value) -> Result<Vec<String>, String> {
    let items = match value {
        Value::Array(items) => items,
        Value::Object(map) if map.len() == 1 => match map.values().next() {
            Some(Value::Array(items)) => items,
            _ => return Err("expected a JSON list".into()),
        },
        _ => return Err("expected a JSON list".into()),
    };
    items
        .iter()
        .map(|item| match item {
            Value::String(s) => Ok(s.trim().to_string()),
            other => Err(format!("list item is not a string: {other}")),
        })
        .collect()
}

fn label_from_value(value: &Value) -> Option<BinaryLabel> {
    match value {
        Value::Bool(b) => Some(BinaryLabel::from(*b)),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

fn optional_text(value: Option<&Value>) -> Option<String> {
    let s = value?.as_str()?.trim();
    let lowered = s.to_lowercase();
    let empty = s.is_empty() || matches!(lowered.as_str(), "none" | "null" | "n/a" | "no error" | "کوئی نہیں");
    (!empty).then(|| s.to_string())
}

fn judgment_from_value(value: &Value) -> Result<Judgment, String> {
    let Value::Object(map) = value else {
        return Err("expected a JSON object".into());
    };
    let raw_label = ["factuality", "label", "verdict"]
        .iter()
        .find_map(|k| map.get(*k))
        .ok_or("judgment has no factuality label")?;
    let label = label_from_value(raw_label).ok_or_else(|| format!("unrecognized label {raw_label}"))?;
    let reasoning = map
        .get("reasoning")
        .and_then(Value::as_str)
        .map(|s| s.trim().to_string())
        .unwrap_or_default();
    Ok(Judgment {
        label,
        reasoning,
        error: optional_text(map.get("error")),
        correction: optional_text(map.get("correction")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_judgment() {
        let raw = "Here you go:\n```json\n{\"reasoning\": \"درست\", \"error\": \"none\", \"correction\": \"none\", \"factuality\": true}\n```\nThanks";
        let j = parse_judgment(raw).unwrap();
        assert_eq!(j.label, BinaryLabel::True);
        assert_eq!(j.reasoning, "درست");
        assert_eq!(j.correction, None);
        assert_eq!(j.error, None);
    }

    #[test]
    fn string_label_and_correction() {
        let j = parse_judgment(r#"{"label": "False", "reasoning": "r", "correction": "اصلاح"}"#).unwrap();
        assert_eq!(j.label, BinaryLabel::False);
        assert_eq!(j.correction.as_deref(), Some("اصلاح"));
    }

    #[test]
    fn bare_list() {
        let out = parse_structured(r#"["سوال؟", "بیان"]"#, OutputShape::ItemizedList).unwrap();
        assert_eq!(out, Structured::List(vec!["سوال؟".into(), "بیان".into()]));
    }

    #[test]
    fn list_inside_prose() {
        let items = parse_list("The claims are: [\"a\", \"b\"] as requested.").unwrap();
        assert_eq!(items, ["a", "b"]);
    }

    #[test]
    fn list_wrapped_in_object() {
        assert_eq!(parse_list(r#"{"claims": ["a"]}"#).unwrap(), ["a"]);
    }

    #[test]
    fn empty_list() {
        assert!(parse_list("[]").unwrap().is_empty());
    }

    #[test]
    fn empty_output_fails() {
        let err = parse_structured("", OutputShape::ItemizedList).unwrap_err();
        assert_eq!(err.reason, "empty output");
        assert!(parse_structured("  ", OutputShape::FreeText).is_err());
    }

    #[test]
    fn garbage_keeps_raw_text() {
        let err = parse_judgment("I think it is true").unwrap_err();
        assert_eq!(err.raw, "I think it is true");
    }

    #[test]
    fn judgment_without_label_fails() {
        assert!(parse_judgment(r#"{"reasoning": "x"}"#).is_err());
    }

    #[test]
    fn non_string_items_rejected() {
        assert!(parse_list("[1, 2]").is_err());
    }

    #[test]
    fn free_text_is_trimmed() {
        assert_eq!(
            parse_structured("  hello \n", OutputShape::FreeText).unwrap(),
            Structured::Text("hello".into())
        );
    }
}
