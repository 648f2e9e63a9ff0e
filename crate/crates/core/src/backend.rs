//! Chat completion backends: the transport trait, a canonical request
//! fingerprint, and fixed/replay/HTTP implementations.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::prompting::PromptMessage;

/// One chat completion request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub messages: Vec<PromptMessage>,
}

impl ChatRequest {
    /// Hex SHA-256 over a canonical rendering of the request. Stable across
    /// processes, usable as a replay key or cache key.
    pub fn fingerprint(&self) -> String {
        let mut canon = String::new();
        writeln!(canon, "model={}", self.model).expect("string write");
        writeln!(canon, "temperature={}", self.temperature).expect("string write");
        writeln!(canon, "max_tokens={}", self.max_tokens).expect("string write");
        for message in &self.messages {
            let role = match message.role {
                crate::prompting::Role::System => "system",
                crate::prompting::Role::User => "user",
                crate::prompting::Role::Assistant => "assistant",
            };
            writeln!(canon, "{role}:{}", message.content).expect("string write");
        }
        let digest = Sha256::digest(canon.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            write!(hex, "{byte:02x}").expect("string write");
        }
        hex
    }
}

/// A completed chat response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatResponse {
    pub content: String,
}

/// Synchronous chat transport. Implementations must be cheap to call from
/// multiple threads.
pub trait ChatBackend: Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse>;
}

/// Replies to every request with the same canned text.
#[derive(Debug, Clone)]
pub struct FixedBackend {
    content: String,
}

impl FixedBackend {
    pub fn new(content: impl Into<String>) -> Self {
        FixedBackend {
            content: content.into(),
        }
    }
}

impl ChatBackend for FixedBackend {
    fn complete(&self, _request: &ChatRequest) -> Result<ChatResponse> {
        Ok(ChatResponse {
            content: self.content.clone(),
        })
    }
}

/// Replays recorded responses keyed by request fingerprint.
///
/// The store is JSON lines, one `{"key", "response"}` object per line. The
/// key `"*"` is a fallback for requests with no exact match; without it an
/// unmatched request is a transport error.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    responses: HashMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct ReplayEntry {
    key: String,
    response: String,
}

impl ReplayBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut backend = ReplayBackend::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ReplayEntry =
                serde_json::from_str(line).map_err(|e| Error::MalformedLine {
                    line: idx + 1,
                    reason: e.to_string(),
                })?;
            backend.responses.insert(entry.key, entry.response);
        }
        Ok(backend)
    }

    pub fn insert(&mut self, key: impl Into<String>, response: impl Into<String>) {
        self.responses.insert(key.into(), response.into());
    }

    pub fn insert_fallback(&mut self, response: impl Into<String>) {
        self.responses.insert("*".to_string(), response.into());
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let key = request.fingerprint();
        let content = self
            .responses
            .get(&key)
            .or_else(|| self.responses.get("*"))
            .ok_or_else(|| Error::Transport {
                message: format!("no recorded response for request {key}"),
            })?;
        Ok(ChatResponse {
            content: content.clone(),
        })
    }
}

#[derive(Debug, Serialize)]
struct WireChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    max_tokens: u32,
    messages: &'a [PromptMessage],
}

#[derive(Debug, Deserialize)]
struct WireChoice {
    message: WireChoiceMessage,
}

#[derive(Debug, Deserialize)]
struct WireChoiceMessage {
    content: String,
}

#[derive(Debug, Deserialize)]
struct WireChatResponse {
    choices: Vec<WireChoice>,
}

/// Talks to an OpenAI-compatible chat completion endpoint over HTTP.
pub struct HttpBackend {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Transport {
                message: format!("client construction failed: {e}"),
            })?;
        Ok(HttpBackend {
            endpoint: endpoint.into(),
            api_key,
            client,
        })
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let body = WireChatRequest {
            model: &request.model,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
            messages: &request.messages,
        };
        let mut http = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            http = http.bearer_auth(key);
        }
        let response = http.send().map_err(|e| Error::Transport {
            message: e.to_string(),
        })?;
        let status = response.status();
        if !status.is_success() {
            let text = response.text().unwrap_or_default();
            return Err(Error::Transport {
                message: format!("endpoint returned {status}: {text}"),
            });
        }
        let parsed: WireChatResponse = response.json().map_err(|e| Error::Transport {
            message: format!("malformed completion payload: {e}"),
        })?;
        let choice = parsed.choices.into_iter().next().ok_or_else(|| Error::Transport {
            message: "completion payload has no choices".to_string(),
        })?;
        Ok(ChatResponse {
            content: choice.message.content,
        })
    }
}
