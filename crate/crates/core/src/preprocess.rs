//! Turns the raw record stream into detection units: natural-language
//! rendering of records, overlapping windows with exactly one new message,
//! and retrieval of the most recent earlier message carrying the same TMSI.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::l3::{GroundTruth, MessageFields, TelemetryRecord, Tmsi};

/// Suffix appended to the newest record of a window.
pub const NEW_MESSAGE_MARKER: &str = " (New message)";

/// Largest supported window size.
pub const MAX_WINDOW: usize = 10;

/// One record rendered for a prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormattedRecord {
    pub text: String,
    pub is_new: bool,
}

/// Renders a record as `<Type> with RNTI <rnti>, and TMSI <tmsi>`, plus the
/// new-message marker when `is_new`. Non-canonical type text passes through
/// verbatim, Unicode intact; nothing else about the record leaks into the
/// text.
pub fn format_record(fields: &MessageFields, is_new: bool) -> FormattedRecord {
    let mut text = format!(
        "{} with RNTI {}, and TMSI {}",
        fields.msg_type.as_text(),
        fields.rnti,
        fields.tmsi
    );
    if is_new {
        text.push_str(NEW_MESSAGE_MARKER);
    }
    FormattedRecord { text, is_new }
}

/// Validated window size, 1 through [`MAX_WINDOW`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    w: usize,
}

impl WindowConfig {
    pub fn new(w: usize) -> Result<Self> {
        if w < 1 || w > MAX_WINDOW {
            return Err(Error::WindowSize { w, max: MAX_WINDOW });
        }
        Ok(WindowConfig { w })
    }

    pub fn w(self) -> usize {
        self.w
    }
}

/// Window-level ground truth: attacked when any member record carries an
/// attack label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowLabel {
    Normal,
    Attacked,
}

pub fn label_window<'a>(labels: impl IntoIterator<Item = &'a GroundTruth>) -> WindowLabel {
    if labels.into_iter().any(GroundTruth::is_attack) {
        WindowLabel::Attacked
    } else {
        WindowLabel::Normal
    }
}

/// One detection unit: `w - 1` context records, the single new record, and
/// the optional most recent earlier record with the same TMSI. The label is
/// evaluation bookkeeping; prompt construction never reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionWindow {
    /// Sequence number of the new record.
    pub position: u64,
    /// Older window members, oldest first, rendered without the marker.
    pub history: Vec<FormattedRecord>,
    /// The newest record, rendered with the marker.
    pub new_record: FormattedRecord,
    /// Structured view of the new record for rule-based detectors.
    pub new_fields: MessageFields,
    /// Most recent earlier record sharing the new record's TMSI, if any.
    pub prev_same_tmsi: Option<FormattedRecord>,
    pub label: WindowLabel,
}

/// Most recent record in `prefix` carrying `tmsi`. The sentinel identity
/// never matches anything.
pub fn previous_with_tmsi(prefix: &[TelemetryRecord], tmsi: Tmsi) -> Option<&TelemetryRecord> {
    if !tmsi.is_assigned() {
        return None;
    }
    prefix.iter().rev().find(|record| record.tmsi == tmsi)
}

/// Streaming window assembler: feed records in stream order, get a window
/// back for every record once `w` records have arrived. Identity retrieval
/// looks across the whole stream seen so far, not just the window.
#[derive(Debug)]
pub struct WindowBuilder {
    w: usize,
    retrieve_prev: bool,
    buffer: VecDeque<(MessageFields, GroundTruth)>,
    last_by_tmsi: HashMap<Tmsi, MessageFields>,
}

impl WindowBuilder {
    pub fn new(config: WindowConfig) -> Self {
        WindowBuilder {
            w: config.w(),
            retrieve_prev: true,
            buffer: VecDeque::with_capacity(config.w() + 1),
            last_by_tmsi: HashMap::new(),
        }
    }

    /// Disables identity retrieval; every window reports no previous message.
    pub fn without_prev(mut self) -> Self {
        self.retrieve_prev = false;
        self
    }

    /// Pushes the next record; returns the window whose new record it is, or
    /// `None` while the stream is still shorter than `w`.
    pub fn push(&mut self, record: &TelemetryRecord) -> Option<DetectionWindow> {
        let fields = record.fields();
        let prev_same_tmsi = if self.retrieve_prev && fields.tmsi.is_assigned() {
            self.last_by_tmsi
                .get(&fields.tmsi)
                .map(|earlier| format_record(earlier, false))
        } else {
            None
        };
        self.buffer.push_back((fields.clone(), record.label.clone()));
        if self.buffer.len() > self.w {
            self.buffer.pop_front();
        }
        if fields.tmsi.is_assigned() {
            self.last_by_tmsi.insert(fields.tmsi, fields.clone());
        }
        if self.buffer.len() < self.w {
            return None;
        }
        let history = self
            .buffer
            .iter()
            .take(self.w - 1)
            .map(|(f, _)| format_record(f, false))
            .collect();
        let label = label_window(self.buffer.iter().map(|(_, l)| l));
        Some(DetectionWindow {
            position: record.seq,
            history,
            new_record: format_record(&fields, true),
            new_fields: fields,
            prev_same_tmsi,
            label,
        })
    }
}

/// Builds every window of a complete trace: exactly `N - w + 1` windows,
/// where window `i` covers records `i ..= i + w - 1` and the last member is
/// the new record. Fails when the trace is shorter than one window.
pub fn build_windows(
    trace: &[TelemetryRecord],
    config: WindowConfig,
) -> Result<Vec<DetectionWindow>> {
    if trace.len() < config.w() {
        return Err(Error::InsufficientData {
            records: trace.len(),
            w: config.w(),
        });
    }
    let mut builder = WindowBuilder::new(config);
    Ok(trace.iter().filter_map(|r| builder.push(r)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::l3::{canonicalize_message_type, MessageType, Rnti, TelemetryRecord, UeId};

    fn fields(msg: &str, rnti: u16, tmsi: u32) -> MessageFields {
        MessageFields {
            msg_type: canonicalize_message_type(msg).unwrap(),
            rnti: Rnti(rnti),
            tmsi: Tmsi(tmsi),
        }
    }

    fn record(seq: u64, msg: &str, rnti: u16, tmsi: u32, label: GroundTruth) -> TelemetryRecord {
        TelemetryRecord {
            seq,
            ue_id: UeId::from("ue-x"),
            msg_type: canonicalize_message_type(msg).unwrap(),
            rnti: Rnti(rnti),
            tmsi: Tmsi(tmsi),
            label,
        }
    }

    #[test]
    fn renders_the_standard_template() {
        let formatted = format_record(&fields("RRCSetup", 26_168, 0), true);
        assert_eq!(formatted.text, "RRCSetup with RNTI 26168, and TMSI 0 (New message)");
        let plain = format_record(&fields("RRCSetupRequest", 23_456, 987_654), false);
        assert_eq!(plain.text, "RRCSetupRequest with RNTI 23456, and TMSI 987654");
    }

    #[test]
    fn renders_mutated_type_text_verbatim() {
        let f = MessageFields {
            msg_type: MessageType::Other("RR\u{0421}S\u{0435}tupR\u{0435}\u{055B}u\u{0435}st".into()),
            rnti: Rnti(5),
            tmsi: Tmsi(6),
        };
        assert_eq!(
            format_record(&f, false).text,
            "RR\u{0421}S\u{0435}tupR\u{0435}\u{055B}u\u{0435}st with RNTI 5, and TMSI 6"
        );
    }

    #[test]
    fn window_size_bounds_are_enforced() {
        assert!(WindowConfig::new(0).is_err());
        assert!(WindowConfig::new(11).is_err());
        assert_eq!(WindowConfig::new(10).unwrap().w(), 10);
    }

    #[test]
    fn sentinel_identity_retrieves_nothing() {
        let prefix = vec![record(0, "RRCSetupRequest", 1, 0, GroundTruth::Benign)];
        assert!(previous_with_tmsi(&prefix, Tmsi(0)).is_none());
    }

    #[test]
    fn retrieval_returns_the_most_recent_match() {
        let prefix = vec![
            record(0, "RegistrationAccept", 1, 59_822, GroundTruth::Benign),
            record(1, "RRCSetup", 2, 7, GroundTruth::Benign),
            record(2, "RRC_SecurityModeComplete", 1, 59_822, GroundTruth::Benign),
        ];
        let found = previous_with_tmsi(&prefix, Tmsi(59_822)).unwrap();
        assert_eq!(found.seq, 2);
        assert_eq!(found.msg_type, MessageType::RrcSecurityModeComplete);
        assert!(previous_with_tmsi(&prefix, Tmsi(999)).is_none());
    }

    fn short_trace(n: usize) -> Vec<TelemetryRecord> {
        (0..n)
            .map(|i| record(i as u64, "RRCSetup", 1, 0, GroundTruth::Benign))
            .collect()
    }

    #[test]
    fn window_counts_match_the_overlap_rule() {
        for (n, w, expect) in [(1016, 6, 1011), (1, 1, 1), (5, 3, 3)] {
            let trace = short_trace(n);
            let windows = build_windows(&trace, WindowConfig::new(w).unwrap()).unwrap();
            assert_eq!(windows.len(), expect);
        }
    }

    #[test]
    fn window_members_and_marker_are_positioned_correctly() {
        let trace = short_trace(5);
        let windows = build_windows(&trace, WindowConfig::new(3).unwrap()).unwrap();
        for (i, window) in windows.iter().enumerate() {
            assert_eq!(window.position, (i + 2) as u64);
            assert_eq!(window.history.len(), 2);
            assert!(window.history.iter().all(|h| !h.text.ends_with(NEW_MESSAGE_MARKER)));
            assert!(window.new_record.text.ends_with(NEW_MESSAGE_MARKER));
        }
    }

    #[test]
    fn too_short_trace_is_an_error() {
        let err = build_windows(&short_trace(2), WindowConfig::new(3).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { records: 2, w: 3 }));
    }

    #[test]
    fn window_label_is_any_attack() {
        use GroundTruth::{Benign, BlindDos};
        assert_eq!(label_window([&Benign, &BlindDos]), WindowLabel::Attacked);
        assert_eq!(label_window([&Benign, &Benign]), WindowLabel::Normal);
        assert_eq!(
            label_window(std::iter::once(&GroundTruth::OtherAttack("x".into()))),
            WindowLabel::Attacked
        );
    }

    #[test]
    fn retrieval_spans_the_whole_prefix_not_the_window() {
        // The identity is bound far before the window starts.
        let mut trace = vec![record(0, "RegistrationAccept", 9, 77, GroundTruth::Benign)];
        for i in 1..6 {
            trace.push(record(i, "RRCSetup", 1, 0, GroundTruth::Benign));
        }
        trace.push(record(6, "RRCSetupRequest", 3, 77, GroundTruth::BlindDos));
        let windows = build_windows(&trace, WindowConfig::new(2).unwrap()).unwrap();
        let last = windows.last().unwrap();
        let prev = last.prev_same_tmsi.as_ref().unwrap();
        assert_eq!(prev.text, "RegistrationAccept with RNTI 9, and TMSI 77");
        assert!(!prev.is_new);
    }

    #[test]
    fn builder_matches_bruteforce_retrieval() {
        // Streamed retrieval must agree with a backward scan of the prefix.
        let mut trace = Vec::new();
        let tmsis = [0u32, 5, 9, 5, 0, 9, 5, 12, 0, 12];
        for (i, &t) in tmsis.iter().enumerate() {
            trace.push(record(i as u64, "RRCSetup", (i % 4) as u16, t, GroundTruth::Benign));
        }
        let windows = build_windows(&trace, WindowConfig::new(1).unwrap()).unwrap();
        for (i, window) in windows.iter().enumerate() {
            let expected = previous_with_tmsi(&trace[..i], Tmsi(tmsis[i]))
                .map(|r| format_record(&r.fields(), false));
            assert_eq!(window.prev_same_tmsi, expected, "at record {i}");
        }
    }

    #[test]
    fn without_prev_suppresses_retrieval() {
        let trace = vec![
            record(0, "RegistrationAccept", 9, 77, GroundTruth::Benign),
            record(1, "RRCSetupRequest", 3, 77, GroundTruth::BlindDos),
        ];
        let mut builder = WindowBuilder::new(WindowConfig::new(1).unwrap()).without_prev();
        let windows: Vec<DetectionWindow> =
            trace.iter().filter_map(|r| builder.push(r)).collect();
        assert!(windows.iter().all(|w| w.prev_same_tmsi.is_none()));
    }
}
