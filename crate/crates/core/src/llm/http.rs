use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatRequest, LlmBackend, LlmError};

pub const LLM_ENDPOINT_ENV: &str = "LECTURELENS_LLM_ENDPOINT";
pub const LLM_API_KEY_ENV: &str = "LECTURELENS_LLM_API_KEY";

/// Chat-completion backend speaking the OpenAI-style JSON protocol.
#[derive(Debug, Clone)]
pub struct HttpLlm {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    /// Dotted path to the reply text, e.g. `choices[0].message.content`.
    pub reply_path: String,
    pub timeout: Duration,
}

impl HttpLlm {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            reply_path: "choices[0].message.content".to_string(),
            timeout: Duration::from_secs(600),
        }
    }

    fn transport(&self, message: impl ToString) -> LlmError {
        LlmError::Transport {
            endpoint: self.endpoint.clone(),
            message: message.to_string(),
        }
    }
}

/// Follows `a.b[0].c` style paths into a JSON value.
pub(crate) fn lookup<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    let mut cur = value;
    for part in path.split('.').filter(|p| !p.is_empty()) {
        let (key, rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if !key.is_empty() {
            cur = cur.get(key)?;
        }
        for idx in rest.split('[').filter(|s| !s.is_empty()) {
            let n: usize = idx.trim_end_matches(']').parse().ok()?;
            cur = cur.get(n)?;
        }
    }
    Some(cur)
}

impl LlmBackend for HttpLlm {
    fn name(&self) -> String {
        self.endpoint.clone()
    }

    fn send(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let body = json!({
            "model": self.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
        .to_string();
        let mut call = agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = call.send(body.as_str()).map_err(|e| self.transport(e))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(LlmError::Status {
                endpoint: self.endpoint.clone(),
                status,
            });
        }
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| self.transport(e))?;
        let missing = || LlmError::MissingText {
            endpoint: self.endpoint.clone(),
            path: self.reply_path.clone(),
        };
        let value: Value = serde_json::from_str(&text).map_err(|_| missing())?;
        lookup(&value, &self.reply_path)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(missing)
    }
}
