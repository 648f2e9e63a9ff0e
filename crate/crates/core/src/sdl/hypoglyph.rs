//! Homoglyph substitution for evasion experiments.
//!
//! A [`HypoglyphMap`] swaps selected Latin code points in rendered message
//! type text for visually confusable characters from other scripts. The map
//! is constrained so the substitution is losslessly reversible: injective, no
//! identity entries, and no replacement character ever appears as a source.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::l3::{canonicalize_message_type, TelemetryRecord};

/// Injective source-to-confusable character map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypoglyphMap {
    forward: BTreeMap<char, char>,
}

impl HypoglyphMap {
    /// Builds a map, rejecting entries that would break reversibility:
    /// a character mapped to itself, two sources sharing a replacement, a
    /// source listed twice, or a replacement that is itself a source.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (char, char)>) -> Result<Self> {
        let mut forward = BTreeMap::new();
        let mut replacements = std::collections::HashSet::new();
        for (from, to) in pairs {
            if from == to {
                return Err(Error::BadHypoglyphMap {
                    reason: format!("`{from}` maps to itself"),
                });
            }
            if forward.insert(from, to).is_some() {
                return Err(Error::BadHypoglyphMap {
                    reason: format!("source `{from}` listed twice"),
                });
            }
            if !replacements.insert(to) {
                return Err(Error::BadHypoglyphMap {
                    reason: format!("replacement `{to}` used twice"),
                });
            }
        }
        for to in &replacements {
            if forward.contains_key(to) {
                return Err(Error::BadHypoglyphMap {
                    reason: format!("`{to}` is both a source and a replacement"),
                });
            }
        }
        Ok(HypoglyphMap { forward })
    }

    /// The stock map: Latin C to Cyrillic Es (U+0421), Latin e to Cyrillic
    /// ie (U+0435), Latin q to the Armenian emphasis mark (U+055B).
    pub fn standard() -> Self {
        HypoglyphMap::from_pairs([
            ('C', '\u{0421}'),
            ('e', '\u{0435}'),
            ('q', '\u{055B}'),
        ])
        .expect("stock map is valid")
    }

    pub fn pairs(&self) -> impl Iterator<Item = (char, char)> + '_ {
        self.forward.iter().map(|(&a, &b)| (a, b))
    }

    /// Replaces every mapped source character with its confusable.
    pub fn obfuscate(&self, text: &str) -> String {
        text.chars()
            .map(|c| self.forward.get(&c).copied().unwrap_or(c))
            .collect()
    }

    /// Replaces every confusable back with its source character. Idempotent
    /// by construction, and an exact inverse of [`Self::obfuscate`].
    pub fn restore(&self, text: &str) -> String {
        text.chars()
            .map(|c| {
                self.forward
                    .iter()
                    .find(|(_, &to)| to == c)
                    .map(|(&from, _)| from)
                    .unwrap_or(c)
            })
            .collect()
    }
}

impl Default for HypoglyphMap {
    fn default() -> Self {
        HypoglyphMap::standard()
    }
}

/// Returns a copy of the trace with the message type text of the selected
/// positions rewritten through the map. Positions index the trace; anything
/// out of range is an error. Records whose rendered type contains no mapped
/// character are returned unchanged.
pub fn hypoglyph_mutate(
    trace: &[TelemetryRecord],
    selection: &[usize],
    map: &HypoglyphMap,
) -> Result<Vec<TelemetryRecord>> {
    let mut out = trace.to_vec();
    for &position in selection {
        let record = out.get_mut(position).ok_or(Error::SelectionOutOfRange {
            position,
            records: trace.len(),
        })?;
        let original = record.msg_type.as_text();
        let mutated = map.obfuscate(original);
        if mutated != original {
            record.msg_type = canonicalize_message_type(&mutated)
                .expect("obfuscation preserves non-emptiness");
        }
    }
    Ok(out)
}
