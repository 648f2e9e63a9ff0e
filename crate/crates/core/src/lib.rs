//! Detection of blind denial-of-service behavior in 5G L3 signaling using
//! chat-model classifiers.
//!
//! The pipeline: telemetry records land in a shared data layer ([`sdl`]),
//! get canonicalized ([`l3`], [`trace_io`]) and windowed with identity
//! retrieval ([`preprocess`]), become chat prompts ([`prompting`]) answered
//! by a backend ([`backend`]), and the verdicts ([`detector`]) are scored
//! against ground truth ([`evaluation`]). A deterministic rule detector
//! provides offline ground truth end to end, so every stage is testable
//! without a live model.

pub mod backend;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod l3;
pub mod preprocess;
pub mod prompting;
pub mod sdl;
pub mod trace_io;

pub use backend::{ChatBackend, ChatRequest, ChatResponse, FixedBackend, HttpBackend, ReplayBackend};
pub use detector::{
    oracle_detect, parse_response, BackendConfig, ChatDetector, Detection, OracleDetector,
    Verdict, WindowDetector,
};
pub use error::{Error, Result};
pub use l3::{GroundTruth, MessageFields, MessageType, Rnti, TelemetryRecord, Tmsi, UeId};
pub use preprocess::{
    build_windows, format_record, DetectionWindow, WindowBuilder, WindowConfig, WindowLabel,
    MAX_WINDOW,
};
pub use prompting::{
    build_prompt, classify_alignment, complete_description, extract_descriptions,
    lint_description, AlignmentGroup, AttackDescription, PredicateCoverage, PromptBundle,
    PromptMessage, PromptMode, PromptOptions, Role,
};
pub use sdl::{
    generate_benign_trace, inject_blind_dos, interleave_shuffle, truncate_trace, HypoglyphMap,
    PollCursor, TraceStore,
};
pub use evaluation::{
    bootstrap_ci_mean, cliffs_delta, kendall_tau_b, percentile, run_detection, sensitivity_study,
    spearman, sweep_windows, ConfusionCounts, LatencyStats, Metrics, RunResult, SampleStatus,
    StudyEntry, StudyResult, UnclassifiedPolicy, WindowSample,
};
pub use trace_io::{parse_trace, read_trace_file, render_trace, write_trace_file, TraceFormat};
