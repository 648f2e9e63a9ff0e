//! Trace serialization: JSON-lines and CSV, one record per line, UTF-8.
//!
//! Both formats carry the same six fields. CSV files start with the fixed
//! header `seq,ue,msg,rnti,tmsi,label`; JSON-lines files carry one object per
//! line with the same keys and tolerate unknown extra keys. The `msg` field
//! may contain arbitrary Unicode (mutated traces do), so CSV output is quoted
//! by a real CSV writer rather than joined by hand.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::l3::{canonicalize_message_type, GroundTruth, Rnti, TelemetryRecord, Tmsi, UeId};

/// On-disk trace encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    JsonLines,
    Csv,
}

/// The fixed CSV header.
pub const CSV_HEADER: &str = "seq,ue,msg,rnti,tmsi,label";

impl TraceFormat {
    /// Picks a format from a file extension: `.csv` means CSV, anything else
    /// (including `.jsonl`) means JSON-lines.
    pub fn from_path(path: &Path) -> TraceFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TraceFormat::Csv,
            _ => TraceFormat::JsonLines,
        }
    }
}

/// Wire shape shared by both formats. Field order here fixes both the JSON
/// key order and the CSV column order.
#[derive(Debug, Serialize, Deserialize)]
struct WireRecord {
    seq: u64,
    ue: String,
    msg: String,
    rnti: u64,
    tmsi: u64,
    label: String,
}

fn record_from_wire(wire: WireRecord, line: usize) -> Result<TelemetryRecord> {
    let msg_type = canonicalize_message_type(&wire.msg).map_err(|_| Error::InvalidField {
        line,
        field: "msg",
        reason: "message type name is empty".to_string(),
    })?;
    if wire.rnti > u64::from(u16::MAX) {
        return Err(Error::InvalidField {
            line,
            field: "rnti",
            reason: "rnti out of 16-bit range".to_string(),
        });
    }
    if wire.tmsi > u64::from(u32::MAX) {
        return Err(Error::InvalidField {
            line,
            field: "tmsi",
            reason: "tmsi out of 32-bit range".to_string(),
        });
    }
    let label = GroundTruth::parse_label(&wire.label).map_err(|_| Error::InvalidField {
        line,
        field: "label",
        reason: "ground-truth label is empty".to_string(),
    })?;
    Ok(TelemetryRecord {
        seq: wire.seq,
        ue_id: UeId(wire.ue),
        msg_type,
        rnti: Rnti(wire.rnti as u16),
        tmsi: Tmsi(wire.tmsi as u32),
        label,
    })
}

fn wire_from_record(record: &TelemetryRecord) -> WireRecord {
    WireRecord {
        seq: record.seq,
        ue: record.ue_id.0.clone(),
        msg: record.msg_type.as_text().to_string(),
        rnti: u64::from(record.rnti.0),
        tmsi: u64::from(record.tmsi.0),
        label: record.label.as_label().to_string(),
    }
}

fn json_field<'a>(
    value: &'a serde_json::Value,
    field: &'static str,
    line: usize,
) -> Result<&'a serde_json::Value> {
    value
        .get(field)
        .ok_or(Error::MissingField { line, field })
}

fn json_u64(value: &serde_json::Value, field: &'static str, line: usize) -> Result<u64> {
    json_field(value, field, line)?
        .as_u64()
        .ok_or_else(|| Error::InvalidField {
            line,
            field,
            reason: "expected an unsigned integer".to_string(),
        })
}

fn json_str<'a>(
    value: &'a serde_json::Value,
    field: &'static str,
    line: usize,
) -> Result<&'a str> {
    json_field(value, field, line)?
        .as_str()
        .ok_or_else(|| Error::InvalidField {
            line,
            field,
            reason: "expected a string".to_string(),
        })
}

/// Parses a single record line. `line` is the 1-based line number used in
/// error messages; for CSV it refers to a data line (the header is line 1).
pub fn parse_record(text: &str, line: usize, format: TraceFormat) -> Result<TelemetryRecord> {
    match format {
        TraceFormat::JsonLines => {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| Error::MalformedLine {
                    line,
                    reason: e.to_string(),
                })?;
            if !value.is_object() {
                return Err(Error::MalformedLine {
                    line,
                    reason: "expected a JSON object".to_string(),
                });
            }
            let wire = WireRecord {
                // seq is optional in JSON-lines; stores renumber on load anyway.
                seq: match value.get("seq") {
                    Some(_) => json_u64(&value, "seq", line)?,
                    None => 0,
                },
                ue: json_str(&value, "ue", line)?.to_string(),
                msg: json_str(&value, "msg", line)?.to_string(),
                rnti: json_u64(&value, "rnti", line)?,
                tmsi: json_u64(&value, "tmsi", line)?,
                label: json_str(&value, "label", line)?.to_string(),
            };
            record_from_wire(wire, line)
        }
        TraceFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .from_reader(text.as_bytes());
            let row: csv::StringRecord = reader
                .records()
                .next()
                .ok_or_else(|| Error::MalformedLine {
                    line,
                    reason: "empty CSV line".to_string(),
                })?
                .map_err(|e| Error::MalformedLine {
                    line,
                    reason: e.to_string(),
                })?;
            if row.len() != 6 {
                return Err(Error::MalformedLine {
                    line,
                    reason: format!("expected 6 columns, found {}", row.len()),
                });
            }
            let uint = |idx: usize, field: &'static str| -> Result<u64> {
                row[idx].trim().parse::<u64>().map_err(|_| Error::InvalidField {
                    line,
                    field,
                    reason: format!("expected an unsigned integer, found `{}`", &row[idx]),
                })
            };
            let wire = WireRecord {
                seq: uint(0, "seq")?,
                ue: row[1].to_string(),
                msg: row[2].to_string(),
                rnti: uint(3, "rnti")?,
                tmsi: uint(4, "tmsi")?,
                label: row[5].to_string(),
            };
            record_from_wire(wire, line)
        }
    }
}

/// Serializes one record (no trailing newline).
pub fn serialize_record(record: &TelemetryRecord, format: TraceFormat) -> String {
    let wire = wire_from_record(record);
    match format {
        TraceFormat::JsonLines => {
            serde_json::to_string(&wire).expect("record serialization cannot fail")
        }
        TraceFormat::Csv => {
            let mut writer = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(Vec::new());
            writer
                .serialize(&wire)
                .expect("record serialization cannot fail");
            let bytes = writer.into_inner().expect("csv writer flush");
            let mut text = String::from_utf8(bytes).expect("csv output is UTF-8");
            while text.ends_with('\n') || text.ends_with('\r') {
                text.pop();
            }
            text
        }
    }
}

/// Parses a whole trace from text. Blank lines are skipped; CSV input must
/// start with the exact [`CSV_HEADER`].
pub fn parse_trace(text: &str, format: TraceFormat) -> Result<Vec<TelemetryRecord>> {
    let mut records = Vec::new();
    let mut lines = text.lines().enumerate();
    if format == TraceFormat::Csv {
        match lines.next() {
            Some((_, header)) if header.trim_end() == CSV_HEADER => {}
            Some((_, header)) => {
                return Err(Error::MalformedLine {
                    line: 1,
                    reason: format!("expected header `{CSV_HEADER}`, found `{header}`"),
                })
            }
            None => return Ok(records),
        }
    }
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_record(line, idx + 1, format)?);
    }
    Ok(records)
}

/// Renders a whole trace, trailing newline included.
pub fn render_trace(records: &[TelemetryRecord], format: TraceFormat) -> String {
    let mut out = String::new();
    if format == TraceFormat::Csv {
        out.push_str(CSV_HEADER);
        out.push('\n');
    }
    for record in records {
        out.push_str(&serialize_record(record, format));
        out.push('\n');
    }
    out
}

/// Reads a trace file, picking the format from the extension.
pub fn read_trace_file(path: &Path) -> Result<Vec<TelemetryRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text, TraceFormat::from_path(path))
}

/// Writes a trace file atomically (temp file in the same directory, then
/// rename), picking the format from the extension.
pub fn write_trace_file(path: &Path, records: &[TelemetryRecord]) -> Result<()> {
    write_atomic(path, render_trace(records, TraceFormat::from_path(path)).as_bytes())
}

/// Write-then-rename so readers never observe a half-written artifact.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("artifact");
    let tmp_name = format!(".{file_name}.tmp");
    let tmp = match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) => dir.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
