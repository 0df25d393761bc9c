use std::path::PathBuf;
use std::sync::Mutex;

use serde_json::json;

use super::prompts::{EVALUATION_SCHEMA_MARKER, LABEL_OPTIONS_PREFIX};
use super::report::Dimension;
use super::{ChatRequest, LlmBackend, LlmError};
use crate::canon::to_canonical_pretty;

/// Served for any request without its own `<hash>.txt`.
pub const DEFAULT_FIXTURE: &str = "_default.txt";

/// Deterministic backend serving `<hash>.txt` files from a fixture directory.
///
/// Requests whose hash has no fixture get `_default.txt` from the same
/// directory if present, else the configured fallback text, else a
/// schema-valid placeholder. Missed hashes are remembered so fixture authors
/// can see which files to create.
#[derive(Debug, Default)]
pub struct MockLlm {
    dir: Option<PathBuf>,
    fallback: Option<String>,
    dump_dir: Option<PathBuf>,
    misses: Mutex<Vec<String>>,
}

impl MockLlm {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            ..Self::default()
        }
    }

    /// Placeholder-only mock, no fixture directory.
    pub fn placeholder() -> Self {
        Self::default()
    }

    /// Answers every request without a fixture with `text`.
    pub fn fixed(text: impl Into<String>) -> Self {
        Self {
            fallback: Some(text.into()),
            ..Self::default()
        }
    }

    /// Also write every request to `<dir>/<hash>.request.json`.
    pub fn dump_requests_to(mut self, dir: impl Into<PathBuf>) -> Self {
        self.dump_dir = Some(dir.into());
        self
    }

    pub fn misses(&self) -> Vec<String> {
        self.misses.lock().expect("mock lock").clone()
    }
}

/// Canned reply shaped after whatever schema the prompt asks for.
pub fn placeholder_response(request: &ChatRequest) -> String {
    let hash = request.stable_hash();
    let user = request.user_content();
    if let Some(line) = user.lines().find(|l| l.starts_with(LABEL_OPTIONS_PREFIX)) {
        let labels: Vec<String> =
            serde_json::from_str(&line[LABEL_OPTIONS_PREFIX.len()..]).unwrap_or_default();
        let entries: Vec<_> = labels
            .iter()
            .map(|l| {
                json!({
                    "interval_label": l,
                    "behavior": format!("placeholder behavior for {l}"),
                    "content_and_expression": "placeholder content",
                    "analysis": "placeholder analysis",
                })
            })
            .collect();
        let v = json!({
            "entries": entries,
            "summary": format!("placeholder optimization summary (request {hash})"),
        });
        return to_canonical_pretty(&v);
    }
    if user.contains(EVALUATION_SCHEMA_MARKER) {
        let dims: Vec<_> = Dimension::ALL
            .iter()
            .map(|d| {
                json!({
                    "name": d.key(),
                    "conclusion": format!("placeholder conclusion for {}", d.key()),
                    "analysis": "placeholder analysis",
                })
            })
            .collect();
        let v = json!({
            "summary": format!("placeholder evaluation summary (request {hash})"),
            "dimensions": dims,
        });
        return to_canonical_pretty(&v);
    }
    format!("placeholder summary (request {hash})")
}

impl LlmBackend for MockLlm {
    fn name(&self) -> String {
        match &self.dir {
            Some(d) => format!("mock:{}", d.display()),
            None => "mock".to_string(),
        }
    }

    fn send(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let hash = request.stable_hash();
        if let Some(dump) = &self.dump_dir {
            std::fs::create_dir_all(dump)
                .and_then(|_| {
                    std::fs::write(
                        dump.join(format!("{hash}.request.json")),
                        to_canonical_pretty(request),
                    )
                })
                .map_err(|e| LlmError::Fixture(e.to_string()))?;
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{hash}.txt"));
            match std::fs::read_to_string(&path) {
                Ok(text) => return Ok(text),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(LlmError::Fixture(format!("{}: {e}", path.display()))),
            }
        }
        self.misses.lock().expect("mock lock").push(hash);
        if let Some(dir) = &self.dir {
            if let Ok(text) = std::fs::read_to_string(dir.join(DEFAULT_FIXTURE)) {
                return Ok(text);
            }
        }
        Ok(match &self.fallback {
            Some(text) => text.clone(),
            None => placeholder_response(request),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::prompts::build_summary_prompt;
    use crate::llm::report::parse_evaluation;
    use crate::llm::{complete, ChatMessage, Role};

    fn req(text: &str) -> ChatRequest {
        ChatRequest {
            messages: vec![ChatMessage { role: Role::User, content: text.into() }],
            temperature: 0.0,
            max_tokens: 10,
        }
    }

    #[test]
    fn serves_fixture_by_hash() {
        let dir = tempfile::tempdir().unwrap();
        let r = req("hello");
        std::fs::write(dir.path().join(format!("{}.txt", r.stable_hash())), "canned").unwrap();
        let mock = MockLlm::new(dir.path());
        assert_eq!(complete(&r, &mock).unwrap(), "canned");
        assert_eq!(complete(&r, &mock).unwrap(), "canned");
        assert!(mock.misses().is_empty());
        let other = complete(&req("other"), &mock).unwrap();
        assert!(other.starts_with("placeholder summary"));
        assert_eq!(mock.misses().len(), 1);
    }

    #[test]
    fn directory_default_covers_misses() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(DEFAULT_FIXTURE), "just prose").unwrap();
        let mock = MockLlm::new(dir.path());
        assert_eq!(complete(&req("x"), &mock).unwrap(), "just prose");
        assert_eq!(mock.misses().len(), 1);
    }

    #[test]
    fn placeholder_is_schema_valid_for_evaluation() {
        let r = crate::llm::prompts::build_evaluation_prompt("s", "corpus").unwrap();
        let text = MockLlm::placeholder().send(&r).unwrap();
        let parsed = parse_evaluation(&text, "S");
        assert!(parsed.parse_failure.is_none());
    }

    #[test]
    fn dumps_requests() {
        let dir = tempfile::tempdir().unwrap();
        let r = build_summary_prompt("abc").unwrap();
        MockLlm::placeholder().dump_requests_to(dir.path()).send(&r).unwrap();
        assert!(dir.path().join(format!("{}.request.json", r.stable_hash())).exists());
    }
}
