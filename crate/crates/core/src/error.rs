//! Crate-wide error type.
//!
//! Every fallible operation in the pipeline returns [`Error`]. Variants keep
//! enough structure for callers to react programmatically (line numbers for
//! trace parsing, elapsed time for backend failures) while rendering as a
//! single human-readable line.

use std::time::Duration;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A message type name was empty where a non-empty name is required.
    #[error("message type name is empty")]
    EmptyMessageName,

    /// A trace line could not be decoded at all (bad JSON, wrong column count).
    #[error("line {line}: malformed record: {reason}")]
    MalformedLine { line: usize, reason: String },

    /// A mandatory record field was absent.
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },

    /// A record field was present but invalid.
    #[error("line {line}: field `{field}`: {reason}")]
    InvalidField {
        line: usize,
        field: &'static str,
        reason: String,
    },

    /// File system failure while reading or writing an artifact. The cause
    /// lives in the source chain, not in this message, so chain-aware
    /// printers report it exactly once.
    #[error("{path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Window size outside the supported range.
    #[error("window size {w} out of range 1..={max}")]
    WindowSize { w: usize, max: usize },

    /// The trace is shorter than one window.
    #[error("trace has {records} records, need at least {w} for one window")]
    InsufficientData { records: usize, w: usize },

    /// Not enough distinct bound identities to place the requested attacks.
    #[error("injection needs {requested} bound TMSIs, trace provides {available}")]
    InjectionCapacity { requested: usize, available: usize },

    /// Attack placement could not satisfy the spacing constraint.
    #[error("could not place {requested} attacks with min_gap {min_gap} in {records} records")]
    InjectionPlacement {
        requested: usize,
        min_gap: usize,
        records: usize,
    },

    /// A mutation selection referenced a position outside the trace.
    #[error("selection position {position} out of range for trace of {records} records")]
    SelectionOutOfRange { position: usize, records: usize },

    /// A hypoglyph map violated injectivity or mapped a character to itself.
    #[error("invalid hypoglyph map: {reason}")]
    BadHypoglyphMap { reason: String },

    /// An attack description with an empty body reached the prompt builder.
    #[error("attack description body is empty")]
    EmptyDescriptionBody,

    /// Invalid configuration value.
    #[error("invalid configuration: {reason}")]
    Config { reason: String },

    /// Raw transport failure reported by a chat backend.
    #[error("backend transport: {message}")]
    Transport { message: String },

    /// A detection request failed; the elapsed wall-clock time is preserved
    /// so the failure can still enter latency accounting.
    #[error("backend request failed after {:.1}ms: {message}", elapsed.as_secs_f64() * 1000.0)]
    Backend { message: String, elapsed: Duration },

    /// One request of a description-extraction batch failed.
    #[error("extraction request {index} failed: {message}")]
    Extraction { index: usize, message: String },

    /// Verdict and label streams disagree in length.
    #[error("length mismatch: {outcomes} outcomes vs {labels} labels")]
    LengthMismatch { outcomes: usize, labels: usize },

    /// All four confusion cells are zero, so no metric is defined.
    #[error("metrics undefined: no classified samples")]
    UndefinedMetrics,

    /// A statistic was requested over an empty sample set.
    #[error("sample set is empty")]
    EmptySamples,

    /// A rank correlation or effect size has no defined value.
    #[error("correlation undefined: {reason}")]
    UndefinedCorrelation { reason: String },
}

impl Error {
    /// Shorthand for configuration errors built from format strings.
    pub fn config(reason: impl Into<String>) -> Self {
        Error::Config {
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
