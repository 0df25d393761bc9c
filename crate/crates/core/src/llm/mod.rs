//! Chat-completion orchestration for evaluation and optimization reports.

#[cfg(feature = "http")]
mod http;
mod mock;
pub mod prompts;
pub mod report;
mod session;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::{sha256_hex, to_canonical_string};

#[cfg(feature = "http")]
pub use http::{HttpLlm, LLM_API_KEY_ENV, LLM_ENDPOINT_ENV};
pub use mock::MockLlm;
pub use session::{evaluate_session, generate_optimization};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("LLM transport error talking to {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("LLM endpoint {endpoint} returned HTTP {status}")]
    Status { endpoint: String, status: u16 },
    #[error("LLM reply from {endpoint} has no text at `{path}`")]
    MissingText { endpoint: String, path: String },
    #[error("mock fixture I/O error: {0}")]
    Fixture(String),
    #[error("{0} is empty")]
    EmptyInput(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

pub const DEFAULT_TEMPERATURE: f64 = 0.0;
pub const DEFAULT_MAX_TOKENS: u32 = 4096;

impl ChatRequest {
    /// Stable content hash, used to key mock fixtures.
    pub fn stable_hash(&self) -> String {
        let full = sha256_hex(to_canonical_string(self).as_bytes());
        full[..16].to_string()
    }

    pub fn user_content(&self) -> String {
        self.messages
            .iter()
            .filter(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// A single attempt at a chat completion.
pub trait LlmBackend: Sync {
    fn name(&self) -> String;

    fn send(&self, request: &ChatRequest) -> Result<String, LlmError>;
}

/// Returns the raw model text, retrying once on transport failure.
pub fn complete(request: &ChatRequest, backend: &dyn LlmBackend) -> Result<String, LlmError> {
    match backend.send(request) {
        Err(LlmError::Transport { .. }) => backend.send(request),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Flaky {
        calls: AtomicUsize,
        fail_first: usize,
        status: Option<u16>,
    }

    impl LlmBackend for Flaky {
        fn name(&self) -> String {
            "flaky".into()
        }

        fn send(&self, _r: &ChatRequest) -> Result<String, LlmError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if let Some(status) = self.status {
                return Err(LlmError::Status { endpoint: "flaky".into(), status });
            }
            if n < self.fail_first {
                Err(LlmError::Transport { endpoint: "flaky".into(), message: "down".into() })
            } else {
                Ok("ok".into())
            }
        }
    }

    fn req() -> ChatRequest {
        ChatRequest {
            messages: vec![ChatMessage { role: Role::User, content: "hi".into() }],
            temperature: 0.0,
            max_tokens: 16,
        }
    }

    #[test]
    fn retries_transport_once() {
        let b = Flaky { calls: AtomicUsize::new(0), fail_first: 1, status: None };
        assert_eq!(complete(&req(), &b).unwrap(), "ok");
        assert_eq!(b.calls.load(Ordering::SeqCst), 2);

        let b = Flaky { calls: AtomicUsize::new(0), fail_first: 5, status: None };
        assert!(matches!(complete(&req(), &b), Err(LlmError::Transport { .. })));
        assert_eq!(b.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn status_errors_not_retried() {
        let b = Flaky { calls: AtomicUsize::new(0), fail_first: 0, status: Some(500) };
        assert!(matches!(complete(&req(), &b), Err(LlmError::Status { status: 500, .. })));
        assert_eq!(b.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = req();
        assert_eq!(a.stable_hash(), req().stable_hash());
        assert_eq!(a.stable_hash().len(), 16);
        let mut b = req();
        b.messages[0].content.push('!');
        assert_ne!(a.stable_hash(), b.stable_hash());
    }
}
