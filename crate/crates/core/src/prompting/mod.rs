//! Prompt construction for chat-based detection, attack-description handling
//! and description extraction from longer reports.
//!
//! Bundles are ordered role/content pairs. Serving-side chat template tokens
//! are deliberately out of scope: whatever transport delivers the bundle owns
//! them.

mod lint;

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::backend::{ChatBackend, ChatRequest};
use crate::error::{Error, Result};
use crate::preprocess::{DetectionWindow, NEW_MESSAGE_MARKER};
use crate::trace_io::write_atomic;

pub use lint::{
    classify_alignment, complete_description, lint_description, AlignmentGroup,
    PredicateCoverage,
};

/// Chat roles, serialized lowercase on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// One chat turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptMessage {
    pub role: Role,
    pub content: String,
}

/// An ordered chat conversation: exactly one system turn, always first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct PromptBundle {
    messages: Vec<PromptMessage>,
}

impl PromptBundle {
    fn new(system: String) -> Self {
        PromptBundle {
            messages: vec![PromptMessage {
                role: Role::System,
                content: system,
            }],
        }
    }

    fn push(&mut self, role: Role, content: String) {
        debug_assert!(role != Role::System, "a bundle has a single system turn");
        self.messages.push(PromptMessage { role, content });
    }

    pub fn messages(&self) -> &[PromptMessage] {
        &self.messages
    }
}

/// Prompting strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptMode {
    /// Question only.
    ZeroShot,
    /// Seeds the reply with a generic reasoning opener.
    GenericCot,
    /// Seeds the reply with the attack-specific checklist.
    CustomCot,
}

/// A named attack description; the body is what gets embedded in prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackDescription {
    pub name: String,
    pub body: String,
}

impl AttackDescription {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Result<Self> {
        let name = name.into();
        let body = body.into();
        if name.trim().is_empty() {
            return Err(Error::config("attack description name is empty"));
        }
        if body.trim().is_empty() {
            return Err(Error::EmptyDescriptionBody);
        }
        Ok(AttackDescription { name, body })
    }

    /// The stock single-sentence blind-DoS description.
    pub fn reference_blind_dos() -> Self {
        AttackDescription {
            name: "Blind DoS".to_string(),
            body: "The adversary sends a RRCSetupRequest using a TMSI value of an \
                   existing connection and a new RNTI value."
                .to_string(),
        }
    }

    /// Returns a copy whose body is completed to cover the core predicates.
    pub fn completed(&self) -> AttackDescription {
        let coverage = lint_description(&self.body);
        AttackDescription {
            name: self.name.clone(),
            body: complete_description(&self.body, coverage),
        }
    }
}

/// Rendering switches for [`build_prompt`].
#[derive(Debug, Clone, Copy, Default)]
pub struct PromptOptions {
    /// Ask for a reasoned verdict instead of a bare class word.
    pub explanations: bool,
    /// Historical rendering quirk: also tag the previous-message line with
    /// the new-message marker. Needed only to reproduce archived prompt
    /// transcripts byte for byte.
    pub marker_on_previous: bool,
}

/// Lowercases a leading plain capitalized word so the body reads naturally
/// after "where"; acronyms and mixed-case openers are left alone. The
/// trailing period is dropped because the sentence template supplies one.
fn embed_body(body: &str) -> String {
    let trimmed = body.trim();
    let stripped = trimmed.strip_suffix('.').unwrap_or(trimmed);
    let mut chars = stripped.chars();
    match chars.next() {
        Some(first) if first.is_uppercase() => {
            let rest = chars.as_str();
            let tail: String = rest.chars().take_while(|c| c.is_alphabetic()).collect();
            if tail.chars().all(|c| c.is_lowercase()) {
                format!("{}{rest}", first.to_lowercase())
            } else {
                stripped.to_string()
            }
        }
        _ => stripped.to_string(),
    }
}

fn system_turn(description: &AttackDescription, options: &PromptOptions) -> String {
    let name = &description.name;
    let instruction = if options.explanations {
        "Remember, you must either say 'Normal' or 'Anomalous' and provide a concise \
         explanation for your decision."
    } else {
        "Remember, you must either say 'Normal' or 'Anomalous' without any explanation."
    };
    format!(
        "You are an expert anomaly detecting assistant in the 5G context.\n\
         You know about the {name} attack, where {body}.\n\
         You are given a set of messages between a gNB and multiple UEs in chronological order.\n\
         Based on the understanding of the given attack, you will need to determine whether \
         the following message sequence contains a {name} attack or not.\n\
         {instruction}",
        body = embed_body(&description.body),
    )
}

fn custom_cot_turn(name: &str) -> String {
    format!(
        "Let's think step by step\n\
         Step 1: Check explicitly if an RRCSetupRequest message exists (mandatory for {name} \
         attack detection).\n\
         Step 2: Note the TMSI value used in this RRCSetupRequest.\n\
         Step 3: Check if a previous RRCSetupRequest (or subsequent message) exists with the \
         same TMSI but a different RNTI.\n\
         Step 4: Classify the sequence explicitly as Anomalous if Step 3 condition is met and \
         explain the reason. Otherwise classify as Normal."
    )
}

/// Builds the chat bundle for one detection window.
///
/// Turn order: the system turn; one user turn carrying the previous
/// same-TMSI message when the window has one (omitted entirely otherwise);
/// one user turn with the window records joined by newlines, newest last and
/// marked; finally the mode's assistant opener, if any. Window label and UE
/// identity never appear in any turn.
pub fn build_prompt(
    window: &DetectionWindow,
    description: &AttackDescription,
    mode: PromptMode,
    options: &PromptOptions,
) -> Result<PromptBundle> {
    if description.body.trim().is_empty() {
        return Err(Error::EmptyDescriptionBody);
    }
    let mut bundle = PromptBundle::new(system_turn(description, options));
    if let Some(prev) = &window.prev_same_tmsi {
        let mut line = format!("Previous message: {}", prev.text);
        if options.marker_on_previous && !line.ends_with(NEW_MESSAGE_MARKER) {
            line.push_str(NEW_MESSAGE_MARKER);
        }
        bundle.push(Role::User, line);
    }
    let mut sequence: Vec<&str> = window.history.iter().map(|h| h.text.as_str()).collect();
    sequence.push(window.new_record.text.as_str());
    bundle.push(Role::User, sequence.join("\n"));
    match mode {
        PromptMode::ZeroShot => {}
        PromptMode::GenericCot => {
            bundle.push(Role::Assistant, "Let's think step by step".to_string());
        }
        PromptMode::CustomCot => {
            bundle.push(Role::Assistant, custom_cot_turn(&description.name));
        }
    }
    Ok(bundle)
}

/// Reads a JSON-lines description file: one `{"name", "body"}` object per
/// line; unknown keys are ignored.
pub fn read_descriptions(path: &Path) -> Result<Vec<AttackDescription>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: AttackDescription =
            serde_json::from_str(line).map_err(|e| Error::MalformedLine {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        out.push(AttackDescription::new(parsed.name, parsed.body).map_err(|e| {
            Error::MalformedLine {
                line: idx + 1,
                reason: e.to_string(),
            }
        })?);
    }
    Ok(out)
}

/// Writes a JSON-lines description file atomically.
pub fn write_descriptions(path: &Path, descriptions: &[AttackDescription]) -> Result<()> {
    let mut text = String::new();
    for d in descriptions {
        text.push_str(&serde_json::to_string(d).expect("description serialization"));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

/// A freshly extracted description with its lint result attached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtractedDescription {
    pub description: AttackDescription,
    pub coverage: PredicateCoverage,
    pub group: AlignmentGroup,
}

/// Settings for [`extract_descriptions`].
#[derive(Debug, Clone)]
pub struct ExtractOptions {
    /// Attack name attached to every extracted description.
    pub attack_name: String,
    /// Number of independent summarization requests.
    pub samples: usize,
    pub model: String,
    pub max_tokens: u32,
    /// Upper bound on concurrent backend requests.
    pub in_flight: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            attack_name: "Blind DoS".to_string(),
            samples: 25,
            model: String::new(),
            max_tokens: 256,
            in_flight: 4,
        }
    }
}

/// Sampling temperature for description extraction; detection runs at 0,
/// extraction deliberately does not.
pub const EXTRACTION_TEMPERATURE: f64 = 1.0;

fn extraction_request(source_text: &str, options: &ExtractOptions) -> ChatRequest {
    let system = "You are a 5G security analyst who writes precise attack summaries.".to_string();
    let user = format!(
        "Summarise the attack explained by the following report in at most three sentences. \
         Keep the concrete message, identifier and protocol names.\n\n{source_text}"
    );
    ChatRequest {
        model: options.model.clone(),
        temperature: EXTRACTION_TEMPERATURE,
        max_tokens: options.max_tokens,
        messages: vec![
            PromptMessage {
                role: Role::System,
                content: system,
            },
            PromptMessage {
                role: Role::User,
                content: user,
            },
        ],
    }
}

/// Issues `samples` summarization requests against the backend (bounded
/// concurrency) and returns the linted results in request order. Any failed
/// request aborts the batch with the failing request's index.
pub fn extract_descriptions(
    source_text: &str,
    backend: &dyn ChatBackend,
    options: &ExtractOptions,
) -> Result<Vec<ExtractedDescription>> {
    if source_text.trim().is_empty() {
        return Err(Error::config("extraction source text is empty"));
    }
    if options.samples == 0 {
        return Err(Error::config("extraction needs at least one sample"));
    }
    let request = extraction_request(source_text, options);
    let results: Mutex<Vec<Option<std::result::Result<String, String>>>> =
        Mutex::new(vec![None; options.samples]);
    let next = AtomicUsize::new(0);
    let workers = options.in_flight.clamp(1, options.samples);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= options.samples {
                    break;
                }
                let outcome = backend
                    .complete(&request)
                    .map(|resp| resp.content)
                    .map_err(|e| e.to_string());
                results.lock().expect("no poisoned workers")[index] = Some(outcome);
            });
        }
    });
    let collected = results.into_inner().expect("workers joined");
    let mut out = Vec::with_capacity(options.samples);
    for (index, slot) in collected.into_iter().enumerate() {
        let body = match slot.expect("every index visited") {
            Ok(body) => body,
            Err(message) => return Err(Error::Extraction { index, message }),
        };
        let trimmed = body.trim().to_string();
        if trimmed.is_empty() {
            return Err(Error::Extraction {
                index,
                message: "backend returned an empty summary".to_string(),
            });
        }
        let coverage = lint_description(&trimmed);
        out.push(ExtractedDescription {
            description: AttackDescription {
                name: options.attack_name.clone(),
                body: trimmed,
            },
            coverage,
            group: classify_alignment(coverage),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::FixedBackend;
    use crate::l3::{canonicalize_message_type, MessageFields, Rnti, Tmsi};
    use crate::preprocess::{format_record, WindowLabel};

    fn window_with_prev() -> DetectionWindow {
        let new_fields = MessageFields {
            msg_type: canonicalize_message_type("RRCSetup").unwrap(),
            rnti: Rnti(26_168),
            tmsi: Tmsi(0),
        };
        let prev_fields = MessageFields {
            msg_type: canonicalize_message_type("RRCSetupRequest").unwrap(),
            rnti: Rnti(26_168),
            tmsi: Tmsi(0),
        };
        DetectionWindow {
            position: 1,
            history: Vec::new(),
            new_record: format_record(&new_fields, true),
            new_fields,
            prev_same_tmsi: Some(format_record(&prev_fields, false)),
            label: WindowLabel::Normal,
        }
    }

    #[test]
    fn zero_shot_bundle_has_expected_turns() {
        let bundle = build_prompt(
            &window_with_prev(),
            &AttackDescription::reference_blind_dos(),
            PromptMode::ZeroShot,
            &PromptOptions::default(),
        )
        .unwrap();
        let messages = bundle.messages();
        assert_eq!(messages.len(), 3);
        assert_eq!(messages[0].role, Role::System);
        assert!(messages[0]
            .content
            .starts_with("You are an expert anomaly detecting assistant in the 5G context."));
        assert!(messages[0].content.contains(
            "You know about the Blind DoS attack, where the adversary sends a RRCSetupRequest"
        ));
        assert!(messages[0]
            .content
            .ends_with("'Normal' or 'Anomalous' without any explanation."));
        assert_eq!(
            messages[1].content,
            "Previous message: RRCSetupRequest with RNTI 26168, and TMSI 0"
        );
        assert_eq!(
            messages[2].content,
            "RRCSetup with RNTI 26168, and TMSI 0 (New message)"
        );
    }

    #[test]
    fn compat_flag_marks_the_previous_line_too() {
        let options = PromptOptions {
            marker_on_previous: true,
            ..Default::default()
        };
        let bundle = build_prompt(
            &window_with_prev(),
            &AttackDescription::reference_blind_dos(),
            PromptMode::ZeroShot,
            &options,
        )
        .unwrap();
        assert_eq!(
            bundle.messages()[1].content,
            "Previous message: RRCSetupRequest with RNTI 26168, and TMSI 0 (New message)"
        );
    }

    #[test]
    fn missing_previous_message_omits_the_turn() {
        let mut window = window_with_prev();
        window.prev_same_tmsi = None;
        let bundle = build_prompt(
            &window,
            &AttackDescription::reference_blind_dos(),
            PromptMode::ZeroShot,
            &PromptOptions::default(),
        )
        .unwrap();
        assert_eq!(bundle.messages().len(), 2);
        assert_eq!(bundle.messages()[1].role, Role::User);
        assert!(!bundle.messages()[1].content.starts_with("Previous message:"));
    }

    #[test]
    fn cot_modes_append_their_opener() {
        let window = window_with_prev();
        let desc = AttackDescription::reference_blind_dos();
        let generic = build_prompt(&window, &desc, PromptMode::GenericCot, &PromptOptions::default())
            .unwrap();
        assert_eq!(
            generic.messages().last().unwrap().content,
            "Let's think step by step"
        );
        let custom = build_prompt(&window, &desc, PromptMode::CustomCot, &PromptOptions::default())
            .unwrap();
        let opener = &custom.messages().last().unwrap().content;
        assert!(opener.starts_with("Let's think step by step\nStep 1:"));
        assert!(opener.ends_with("Otherwise classify as Normal."));
        assert_eq!(custom.messages().last().unwrap().role, Role::Assistant);
    }

    #[test]
    fn explanation_mode_changes_only_the_instruction() {
        let window = window_with_prev();
        let desc = AttackDescription::reference_blind_dos();
        let on = build_prompt(
            &window,
            &desc,
            PromptMode::ZeroShot,
            &PromptOptions {
                explanations: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(on.messages()[0]
            .content
            .ends_with("provide a concise explanation for your decision."));
        assert_eq!(on.messages()[1..], build_prompt(
            &window,
            &desc,
            PromptMode::ZeroShot,
            &PromptOptions::default()
        )
        .unwrap()
        .messages()[1..]);
    }

    #[test]
    fn empty_description_body_is_rejected() {
        assert!(matches!(
            AttackDescription::new("Blind DoS", "  "),
            Err(Error::EmptyDescriptionBody)
        ));
    }

    #[test]
    fn prompt_construction_is_deterministic() {
        let window = window_with_prev();
        let desc = AttackDescription::reference_blind_dos();
        let a = build_prompt(&window, &desc, PromptMode::CustomCot, &PromptOptions::default());
        let b = build_prompt(&window, &desc, PromptMode::CustomCot, &PromptOptions::default());
        assert_eq!(a.unwrap(), b.unwrap());
    }

    #[test]
    fn extraction_returns_one_linted_description_per_sample() {
        let backend = FixedBackend::new(
            "The adversary sends a RRCSetupRequest with the TMSI of an existing \
             connection and a new RNTI value.",
        );
        let options = ExtractOptions {
            samples: 25,
            model: "summarizer".to_string(),
            ..Default::default()
        };
        let out = extract_descriptions("Long attack report text.", &backend, &options).unwrap();
        assert_eq!(out.len(), 25);
        assert!(out.iter().all(|d| d.coverage.p1 && d.coverage.p2));
        assert!(out.iter().all(|d| d.description.name == "Blind DoS"));
    }

    #[test]
    fn empty_source_text_is_rejected() {
        let backend = FixedBackend::new("x");
        let err =
            extract_descriptions("  ", &backend, &ExtractOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }
}
