use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendError, BackendReply, ChatBackend, ChatRequest};

/// Request fingerprint used to key scripted replies.
pub fn fingerprint(template: &str, input: &str) -> String {
    let mut h = Sha256::new();
    h.update(template.as_bytes());
    h.update([0x1f]);
    h.update(input.as_bytes());
    hex::encode(h.finalize())
}

/// One line of a transcript file.
///
/// The request is identified either by `input` (hashed together with
/// `template`) or by a precomputed `fingerprint`. `responses` are served in
/// order, the last one repeating; `error` makes every attempt fail with a
/// `"transient"` or `"auth"` error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub template: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub responses: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_tokens: Option<u64>,
}

type Responder = dyn Fn(&ChatRequest) -> Result<BackendReply, BackendError> + Send + Sync;

/// Replays canned replies keyed by (template, input). Requests with no
/// script fail with [`BackendError::Unexpected`] unless a fallback is set.
#[derive(Default)]
pub struct ScriptedChat {
    scripts: HashMap<String, Vec<Result<BackendReply, BackendError>>>,
    cursors: Mutex<HashMap<String, usize>>,
    fallback: Option<Arc<Responder>>,
    identity: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Invalid { path: String, line: usize, message: String },
}

impl ScriptedChat {
    pub fn new() -> Self {
        Self {
            identity: "mock-llm:inline".into(),
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, TranscriptError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| TranscriptError::Io {
            path: display.clone(),
            source,
        })?;
        let mut chat = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let invalid = |message: String| TranscriptError::Invalid {
                path: display.clone(),
                line: i + 1,
                message,
            };
            let entry: TranscriptEntry = serde_json::from_str(line).map_err(|e| invalid(e.to_string()))?;
            chat.add_entry(entry).map_err(invalid)?;
        }
        chat.identity = format!("mock-llm:sha256:{}", hex::encode(Sha256::digest(text.as_bytes())));
        Ok(chat)
    }

    pub fn add_entry(&mut self, entry: TranscriptEntry) -> Result<(), String> {
        let key = match (&entry.fingerprint, &entry.input) {
            (Some(fp), _) => fp.clone(),
            (None, Some(input)) => fingerprint(&entry.template, input),
            (None, None) => return Err("entry needs `input` or `fingerprint`".into()),
        };
        let usage = |text: &str| BackendReply {
            text: text.to_string(),
            input_tokens: entry.input_tokens,
            output_tokens: entry.output_tokens,
            truncated: false,
        };
        let script: Vec<_> = match (&entry.error, entry.responses.is_empty(), &entry.response) {
            (Some(kind), _, _) => {
                let err = match kind.as_str() {
                    "transient" => BackendError::Transport("injected transient failure".into()),
                    "auth" => BackendError::Auth("injected auth failure".into()),
                    other => return Err(format!("unknown error kind {other:?}")),
                };
                vec![Err(err)]
            }
            (None, false, _) => entry.responses.iter().map(|r| Ok(usage(r))).collect(),
            (None, true, Some(r)) => vec![Ok(usage(r))],
            (None, true, None) => return Err("entry needs `response`, `responses` or `error`".into()),
        };
        self.scripts.insert(key, script);
        Ok(())
    }

    pub fn with_reply(self, template: &str, input: &str, reply: &str) -> Self {
        self.with_replies(template, input, &[reply])
    }

    pub fn with_replies(mut self, template: &str, input: &str, replies: &[&str]) -> Self {
        self.scripts.insert(
            fingerprint(template, input),
            replies.iter().map(|r| Ok(BackendReply::text(*r))).collect(),
        );
        self
    }

    pub fn with_failure(mut self, template: &str, input: &str, error: BackendError) -> Self {
        self.scripts.insert(fingerprint(template, input), vec![Err(error)]);
        self
    }

    /// Consulted for requests that have no script.
    pub fn with_fallback(
        mut self,
        responder: impl Fn(&ChatRequest) -> Result<BackendReply, BackendError> + Send + Sync + 'static,
    ) -> Self {
        self.fallback = Some(Arc::new(responder));
        self
    }

    pub fn len(&self) -> usize {
        self.scripts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scripts.is_empty()
    }
}

impl ChatBackend for ScriptedChat {
    fn identity(&self) -> String {
        self.identity.clone()
    }

    fn send(&self, request: &ChatRequest) -> Result<BackendReply, BackendError> {
        let key = fingerprint(&request.template, &request.key_input);
        let Some(script) = self.scripts.get(&key) else {
            return match &self.fallback {
                Some(f) => f(request),
                None => Err(BackendError::Unexpected(format!(
                    "no scripted reply for template `{}` and input {:?}",
                    request.template,
                    request.key_input.chars().take(80).collect::<String>()
                ))),
            };
        };
        let mut cursors = self.cursors.lock().expect("cursor lock poisoned");
        let cursor = cursors.entry(key).or_insert(0);
        let reply = script[(*cursor).min(script.len() - 1)].clone();
        *cursor += 1;
        reply
    }
}

/// Backend driven by a closure.
pub struct FnChat {
    responder: Box<Responder>,
}

impl FnChat {
    pub fn new(responder: impl Fn(&ChatRequest) -> Result<BackendReply, BackendError> + Send + Sync + 'static) -> Self {
        Self {
            responder: Box::new(responder),
        }
    }
}

impl ChatBackend for FnChat {
    fn identity(&self) -> String {
        "mock-llm:fn".into()
    }

    fn send(&self, request: &ChatRequest) -> Result<BackendReply, BackendError> {
        (self.responder)(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn replies_served_in_order_then_repeat() {
        let chat = ScriptedChat::new().with_replies("t", "in", &["a", "b"]);
        let req = ChatRequest::new("m", "prompt").for_template("t", "in");
        let texts: Vec<_> = (0..3).map(|_| chat.send(&req).unwrap().text).collect();
        assert_eq!(texts, ["a", "b", "b"]);
    }

    #[test]
    fn unknown_request_is_rejected() {
        let chat = ScriptedChat::new();
        let err = chat.send(&ChatRequest::new("m", "x")).unwrap_err();
        assert!(matches!(err, BackendError::Unexpected(_)));
        assert!(!err.is_retryable());
    }

    #[test]
    fn loads_transcript_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            r#"{{"template":"t","input":"x","response":"y","input_tokens":3,"output_tokens":1}}"#
        )
        .unwrap();
        writeln!(f).unwrap();
        writeln!(
            f,
            r#"{{"template":"t","fingerprint":"{}","error":"transient"}}"#,
            fingerprint("t", "z")
        )
        .unwrap();
        let chat = ScriptedChat::load(f.path()).unwrap();
        assert_eq!(chat.len(), 2);
        assert!(chat.identity().starts_with("mock-llm:sha256:"));
        let reply = chat.send(&ChatRequest::new("m", "p").for_template("t", "x")).unwrap();
        assert_eq!(reply.text, "y");
        assert_eq!(reply.input_tokens, Some(3));
        let err = chat
            .send(&ChatRequest::new("m", "p").for_template("t", "z"))
            .unwrap_err();
        assert!(err.is_retryable());
    }

    #[test]
    fn bad_transcript_line_is_located() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"template":"t"}}"#).unwrap();
        let err = ScriptedChat::load(f.path()).err().unwrap();
        assert!(matches!(err, TranscriptError::Invalid { line: 1, .. }));
    }
}
