//! Shared-data-layer simulation: an append-only telemetry store with
//! cursor-based polling, plus the traffic generators and the hypoglyph
//! mutation tooling in the submodules.
//!
//! The store is the single source of truth for record ordering: `seq` always
//! equals append position, contiguous from 0. Renumbering on load keeps that
//! invariant for snapshots produced elsewhere.

mod gen;
mod hypoglyph;

use std::path::Path;

use crate::error::Result;
use crate::l3::TelemetryRecord;
use crate::trace_io;

pub use gen::{
    generate_benign_trace, generate_session, inject_blind_dos, interleave_shuffle,
    renumber, truncate_trace, IdentityAction, SessionTemplate,
};
pub use hypoglyph::{hypoglyph_mutate, HypoglyphMap};

/// Append-only record store. A single writer appends; any number of readers
/// poll with private cursors. Records are immutable once appended.
#[derive(Debug, Default, Clone)]
pub struct TraceStore {
    records: Vec<TelemetryRecord>,
}

impl TraceStore {
    pub fn new() -> Self {
        TraceStore::default()
    }

    /// Builds a store from existing records, renumbering `seq` to restore the
    /// append-order invariant.
    pub fn from_records(records: impl IntoIterator<Item = TelemetryRecord>) -> Self {
        let mut store = TraceStore::new();
        for record in records {
            store.append(record);
        }
        store
    }

    /// Appends one record, overwriting its `seq` with the append position.
    /// Returns the assigned sequence number.
    pub fn append(&mut self, mut record: TelemetryRecord) -> u64 {
        let seq = self.records.len() as u64;
        record.seq = seq;
        self.records.push(record);
        seq
    }

    /// Sequence number the next append will receive.
    pub fn next_seq(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TelemetryRecord] {
        &self.records
    }

    /// Returns up to `max` records past the cursor and advances the cursor to
    /// the last record delivered. Polling never skips and never repeats: each
    /// appended record is delivered exactly once per cursor. An empty batch
    /// means the cursor has caught up.
    pub fn poll(&self, cursor: &mut PollCursor, max: usize) -> Vec<TelemetryRecord> {
        let start = match cursor.position {
            Some(seq) => (seq + 1) as usize,
            None => 0,
        };
        let end = start.saturating_add(max).min(self.records.len());
        if start >= end {
            return Vec::new();
        }
        let batch = self.records[start..end].to_vec();
        cursor.position = Some(batch.last().expect("non-empty batch").seq);
        batch
    }

    /// Loads a snapshot file (format picked by extension), renumbering `seq`.
    pub fn load(path: &Path) -> Result<Self> {
        Ok(TraceStore::from_records(trace_io::read_trace_file(path)?))
    }

    /// Writes a snapshot file atomically (format picked by extension).
    pub fn save(&self, path: &Path) -> Result<()> {
        trace_io::write_trace_file(path, &self.records)
    }
}

/// Private read position of one poller: the last sequence number delivered,
/// or `None` before the first poll. Strictly monotone.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct PollCursor {
    position: Option<u64>,
}

impl PollCursor {
    pub fn new() -> Self {
        PollCursor::default()
    }

    pub fn position(&self) -> Option<u64> {
        self.position
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::l3::{GroundTruth, MessageType, Rnti, Tmsi, UeId};

    fn record(i: u32) -> TelemetryRecord {
        TelemetryRecord {
            seq: 999, // deliberately wrong; append assigns the real value
            ue_id: UeId::from("ue-0"),
            msg_type: MessageType::RrcSetup,
            rnti: Rnti(1),
            tmsi: Tmsi(i),
            label: GroundTruth::Benign,
        }
    }

    #[test]
    fn append_assigns_contiguous_seq() {
        let mut store = TraceStore::new();
        assert_eq!(store.append(record(0)), 0);
        assert_eq!(store.append(record(1)), 1);
        for i in 2..1016 {
            store.append(record(i));
        }
        assert_eq!(store.records()[1015].seq, 1015);
        assert_eq!(store.next_seq(), 1016);
    }

    #[test]
    fn poll_drains_exactly_once() {
        let mut store = TraceStore::new();
        for i in 0..1016 {
            store.append(record(i));
        }
        let mut cursor = PollCursor::new();
        let mut batches = Vec::new();
        loop {
            let batch = store.poll(&mut cursor, 100);
            if batch.is_empty() {
                break;
            }
            batches.push(batch);
        }
        assert_eq!(batches.len(), 11);
        assert!(batches[..10].iter().all(|b| b.len() == 100));
        assert_eq!(batches[10].len(), 16);
        let seqs: Vec<u64> = batches.into_iter().flatten().map(|r| r.seq).collect();
        assert_eq!(seqs, (0..1016).collect::<Vec<u64>>());
        // Caught up: further polls stay empty until new appends arrive.
        assert!(store.poll(&mut cursor, 100).is_empty());
    }

    #[test]
    fn independent_cursors_see_the_same_stream() {
        let mut store = TraceStore::new();
        for i in 0..10 {
            store.append(record(i));
        }
        let mut a = PollCursor::new();
        let mut b = PollCursor::new();
        let first_a = store.poll(&mut a, 4);
        let all_b = store.poll(&mut b, 100);
        assert_eq!(first_a, all_b[..4].to_vec());
        assert_eq!(store.poll(&mut a, 100).len(), 6);
    }

    #[test]
    fn from_records_renumbers() {
        let store = TraceStore::from_records(vec![record(5), record(6)]);
        assert_eq!(store.records()[0].seq, 0);
        assert_eq!(store.records()[1].seq, 1);
    }
}
