//! Window classification: verdict parsing, the deterministic rule detector
//! and the chat-backed detector.

use std::sync::LazyLock;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::backend::{ChatBackend, ChatRequest};
use crate::error::{Error, Result};
use crate::l3::{MessageFields, MessageType};
use crate::preprocess::DetectionWindow;
use crate::prompting::{build_prompt, AttackDescription, PromptMode, PromptOptions};
use crate::sdl::HypoglyphMap;

/// Binary verdict over one detection window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Normal,
    Anomalous,
}

impl Verdict {
    pub fn is_anomalous(&self) -> bool {
        matches!(self, Verdict::Anomalous)
    }
}

/// One classified window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    /// `None` when the reply contained no class word at all; such windows
    /// are tallied as unclassified rather than as wrong answers.
    pub verdict: Option<Verdict>,
    /// Model's stated reasoning; populated only by chat detectors asked for
    /// explanations, and only on anomalous verdicts.
    pub explanation: Option<String>,
    /// Wall-clock time spent producing the verdict.
    pub latency: Duration,
    /// Unparsed backend reply.
    pub raw: String,
}

/// Chat detector settings.
#[derive(Debug, Clone)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub request_timeout: Duration,
    pub explanation_enabled: bool,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: String::new(),
            model: String::new(),
            temperature: 0.0,
            max_output_tokens: 256,
            request_timeout: Duration::from_secs(30),
            explanation_enabled: false,
        }
    }
}

static VERDICT_WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(anomalous|normal)\b").expect("static pattern"));

/// Extracts the verdict from a backend reply: the earliest standalone
/// occurrence of either class word wins, case-insensitively. `None` when
/// neither word appears. The second slot is the reply minus the matched word
/// with surrounding punctuation trimmed, for use as an explanation.
pub fn parse_response(raw: &str) -> Option<(Verdict, String)> {
    let found = VERDICT_WORD.find(raw)?;
    let verdict = if found.as_str().eq_ignore_ascii_case("anomalous") {
        Verdict::Anomalous
    } else {
        Verdict::Normal
    };
    let mut remainder = String::new();
    remainder.push_str(&raw[..found.start()]);
    remainder.push_str(&raw[found.end()..]);
    let cleaned = remainder
        .trim()
        .trim_start_matches(['.', ',', ':', ';', '-', '!'])
        .trim()
        .to_string();
    Some((verdict, cleaned))
}

/// The deterministic ground-truth rule: the window's new message is a setup
/// request carrying an in-use TMSI under a different RNTI.
///
/// Message types are restored through `map` before comparison, so visually
/// disguised type names cannot dodge the rule. `prefix` is every record
/// before the window's new message, in order.
pub fn oracle_detect(
    window: &DetectionWindow,
    prefix: &[MessageFields],
    map: &HypoglyphMap,
) -> Verdict {
    let restored = map.restore(window.new_fields.msg_type.as_text());
    if restored != MessageType::RrcSetupRequest.as_text() {
        return Verdict::Normal;
    }
    let tmsi = window.new_fields.tmsi;
    if !tmsi.is_assigned() {
        return Verdict::Normal;
    }
    let reused = prefix
        .iter()
        .any(|fields| fields.tmsi == tmsi && fields.rnti != window.new_fields.rnti);
    if reused {
        Verdict::Anomalous
    } else {
        Verdict::Normal
    }
}

/// A detector consumes windows in trace order. `prefix` holds the fields of
/// every record before the window's new message.
pub trait WindowDetector {
    fn classify(&mut self, window: &DetectionWindow, prefix: &[MessageFields]) -> Result<Detection>;
}

/// Rule-based detector; offline ground truth for evaluating chat detectors.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    map: HypoglyphMap,
    /// With this off the detector never sees past records and degenerates
    /// to always-normal, quantifying what identity retrieval is worth.
    prev_enabled: bool,
}

impl OracleDetector {
    pub fn new() -> Self {
        OracleDetector {
            map: HypoglyphMap::standard(),
            prev_enabled: true,
        }
    }

    pub fn with_map(map: HypoglyphMap) -> Self {
        OracleDetector {
            map,
            prev_enabled: true,
        }
    }

    pub fn without_previous(mut self) -> Self {
        self.prev_enabled = false;
        self
    }
}

impl Default for OracleDetector {
    fn default() -> Self {
        Self::new()
    }
}

impl WindowDetector for OracleDetector {
    fn classify(&mut self, window: &DetectionWindow, prefix: &[MessageFields]) -> Result<Detection> {
        let start = Instant::now();
        let verdict = if self.prev_enabled {
            oracle_detect(window, prefix, &self.map)
        } else {
            oracle_detect(window, &[], &self.map)
        };
        let raw = match verdict {
            Verdict::Anomalous => "Anomalous",
            Verdict::Normal => "Normal",
        };
        Ok(Detection {
            verdict: Some(verdict),
            explanation: None,
            latency: start.elapsed(),
            raw: raw.to_string(),
        })
    }
}

/// Classifies windows by prompting a chat backend.
pub struct ChatDetector<B: ChatBackend> {
    backend: B,
    config: BackendConfig,
    description: AttackDescription,
    mode: PromptMode,
    options: PromptOptions,
}

impl<B: ChatBackend> ChatDetector<B> {
    pub fn new(
        backend: B,
        config: BackendConfig,
        description: AttackDescription,
        mode: PromptMode,
    ) -> Result<Self> {
        if config.temperature != 0.0 {
            return Err(Error::config(
                "detection requires temperature 0 for reproducible verdicts",
            ));
        }
        let options = PromptOptions {
            explanations: config.explanation_enabled,
            marker_on_previous: false,
        };
        Ok(ChatDetector {
            backend,
            config,
            description,
            mode,
            options,
        })
    }

    /// Builds the request this detector would send for a window.
    pub fn request_for(&self, window: &DetectionWindow) -> Result<ChatRequest> {
        let bundle = build_prompt(window, &self.description, self.mode, &self.options)?;
        Ok(ChatRequest {
            model: self.config.model.clone(),
            temperature: self.config.temperature,
            max_tokens: self.config.max_output_tokens,
            messages: bundle.messages().to_vec(),
        })
    }
}

impl<B: ChatBackend> WindowDetector for ChatDetector<B> {
    fn classify(&mut self, window: &DetectionWindow, _prefix: &[MessageFields]) -> Result<Detection> {
        let request = self.request_for(window)?;
        let start = Instant::now();
        let response = self.backend.complete(&request).map_err(|e| Error::Backend {
            message: e.to_string(),
            elapsed: start.elapsed(),
        })?;
        let latency = start.elapsed();
        let raw = response.content;
        let Some((verdict, remainder)) = parse_response(&raw) else {
            return Ok(Detection {
                verdict: None,
                explanation: None,
                latency,
                raw,
            });
        };
        let explanation = (self.config.explanation_enabled
            && verdict == Verdict::Anomalous
            && !remainder.is_empty())
        .then_some(remainder);
        Ok(Detection {
            verdict: Some(verdict),
            explanation,
            latency,
            raw,
        })
    }
}

/// Whether a reply parses to a verdict at all; replies that do not are
/// counted separately from wrong answers downstream.
pub fn is_classifiable(raw: &str) -> bool {
    parse_response(raw).is_some()
}
