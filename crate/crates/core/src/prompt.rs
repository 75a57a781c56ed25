//! Prompt templates shipped as byte-exact assets.
//!
//! A placeholder is `{name}` where `name` is an ASCII identifier. Any other
//! brace is literal text, so JSON examples inside a prompt need no escaping.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CLAIM_EXTRACTION: &str = "claim_extraction";
pub const QUERY_GENERATION: &str = "query_generation";
pub const VERIFICATION: &str = "verification";
pub const TRANSLATE_UR_EN: &str = "translate_ur_en";
pub const TRANSLATE_EN_UR: &str = "translate_en_ur";
pub const PRE_TRANSLATION: &str = "pre_translation";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputShape {
    FreeText,
    ItemizedList,
    LabeledJudgment,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("unbound placeholder: {0}")]
    Unbound(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub text: String,
    pub shape: OutputShape,
}

enum Piece<'a> {
    Literal(&'a str),
    Slot(&'a str),
}

fn pieces(text: &str) -> Vec<Piece<'_>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut literal_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let name_start = i + 1;
            let mut j = name_start;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            let is_ident = j > name_start && j < bytes.len() && bytes[j] == b'}' && !bytes[name_start].is_ascii_digit();
            if is_ident {
                if literal_start < i {
                    out.push(Piece::Literal(&text[literal_start..i]));
                }
                out.push(Piece::Slot(&text[name_start..j]));
                i = j + 1;
                literal_start = i;
                continue;
            }
        }
        i += 1;
    }
    if literal_start < text.len() {
        out.push(Piece::Literal(&text[literal_start..]));
    }
    out
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, text: impl Into<String>, shape: OutputShape) -> Self {
        Self {
            name: name.into(),
            text: text.into(),
            shape,
        }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for piece in pieces(&self.text) {
            if let Piece::Slot(name) = piece {
                if !names.contains(&name) {
                    names.push(name);
                }
            }
        }
        names
    }

    /// Substitutes every placeholder in one pass. Bound values are inserted
    /// verbatim and never rescanned.
    pub fn render(&self, bindings: &[(&str, &str)]) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(self.text.len());
        for piece in pieces(&self.text) {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Slot(name) => {
                    let value = bindings
                        .iter()
                        .find(|(k, _)| *k == name)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| TemplateError::Unbound(name.to_string()))?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }
}

pub fn claim_extraction() -> PromptTemplate {
    PromptTemplate::new(
        CLAIM_EXTRACTION,
        include_str!("../assets/prompts/claim_extraction.txt"),
        OutputShape::ItemizedList,
    )
}

pub fn query_generation() -> PromptTemplate {
    PromptTemplate::new(
        QUERY_GENERATION,
        include_str!("../assets/prompts/query_generation.txt"),
        OutputShape::ItemizedList,
    )
}

pub fn verification() -> PromptTemplate {
    PromptTemplate::new(
        VERIFICATION,
        include_str!("../assets/prompts/verification.txt"),
        OutputShape::LabeledJudgment,
    )
}

pub fn translate_ur_en() -> PromptTemplate {
    PromptTemplate::new(
        TRANSLATE_UR_EN,
        include_str!("../assets/prompts/translate_ur_en.txt"),
        OutputShape::FreeText,
    )
}

pub fn translate_en_ur() -> PromptTemplate {
    PromptTemplate::new(
        TRANSLATE_EN_UR,
        include_str!("../assets/prompts/translate_en_ur.txt"),
        OutputShape::FreeText,
    )
}

pub fn pre_translation() -> PromptTemplate {
    PromptTemplate::new(
        PRE_TRANSLATION,
        include_str!("../assets/prompts/pre_translation.txt"),
        OutputShape::FreeText,
    )
}

pub fn builtin() -> Vec<PromptTemplate> {
    vec![
        claim_extraction(),
        query_generation(),
        verification(),
        translate_ur_en(),
        translate_en_ur(),
        pre_translation(),
    ]
}

/// Template name to SHA-256 of its text, for run manifests.
pub fn asset_hashes() -> BTreeMap<String, String> {
    builtin().into_iter().map(|t| (t.name.clone(), t.sha256())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translator_prompt_keeps_format_warning() {
        let out = translate_ur_en()
            .render(&[("input", "پاکستان کا دارالحکومت کیا ہے؟")])
            .unwrap();
        assert!(out.contains("DO NOT RESPOND WITH ANYTHING ELSE"));
        assert!(out.ends_with("\n\nپاکستان کا دارالحکومت کیا ہے؟"));
        assert!(out.starts_with("You are given a piece of text in Urdu."));
    }

    #[test]
    fn placeholder_free_template_renders_verbatim() {
        let t = PromptTemplate::new("plain", "no slots {\"json\": 1} here", OutputShape::FreeText);
        assert_eq!(t.render(&[]).unwrap(), t.text);
        assert!(t.placeholders().is_empty());
    }

    #[test]
    fn missing_binding_names_the_placeholder() {
        let err = translate_en_ur().render(&[]).unwrap_err();
        assert_eq!(err, TemplateError::Unbound("input".into()));
        assert_eq!(err.to_string(), "unbound placeholder: input");
    }

    #[test]
    fn values_are_not_rescanned() {
        let t = PromptTemplate::new("t", "a {x} b", OutputShape::FreeText);
        assert_eq!(t.render(&[("x", "{x}")]).unwrap(), "a {x} b");
    }

    #[test]
    fn rendering_is_idempotent() {
        let t = verification();
        let b = [("claim", "c"), ("evidence", "e")];
        assert_eq!(t.render(&b).unwrap(), t.render(&b).unwrap());
    }

    #[test]
    fn builtin_placeholders() {
        assert_eq!(claim_extraction().placeholders(), vec!["input"]);
        assert_eq!(query_generation().placeholders(), vec!["input"]);
        assert_eq!(verification().placeholders(), vec!["claim", "evidence"]);
        assert_eq!(pre_translation().placeholders(), vec!["examples", "input"]);
        assert_eq!(asset_hashes().len(), 6);
    }
}
