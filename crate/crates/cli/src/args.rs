//! Flag definitions for the command surface. Every struct also serializes
//! so the resolved configuration can be embedded in the run manifest.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use l3watch::evaluation::UnclassifiedPolicy;
use l3watch::prompting::PromptMode;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "l3watch",
    version,
    about = "Window-based anomaly detection over 5G L3 signalling telemetry"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benign signalling trace.
    Gen(GenArgs),
    /// Inject spoofed connection requests into a trace.
    Inject(InjectArgs),
    /// Replace characters in selected records with visual look-alikes.
    Mutate(MutateArgs),
    /// Classify every window of a trace at one window size.
    Run(RunArgs),
    /// Classify across several window sizes and tabulate metrics.
    Sweep(SweepArgs),
    /// Check attack descriptions for the wording detection relies on.
    Lint(LintArgs),
    /// Measure how description wording affects detection quality.
    Study(StudyArgs),
    /// Render stored run results to CSV tables.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// Number of simulated UEs.
    #[arg(long, default_value_t = 4)]
    pub ues: usize,
    /// Registration sessions per UE.
    #[arg(long, default_value_t = 23)]
    pub sessions: usize,
    #[arg(long)]
    pub seed: u64,
    /// Truncate the shuffled trace to this many records.
    #[arg(long)]
    pub records: Option<usize>,
    /// Output trace path; the extension picks the format (.jsonl or .csv).
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path override.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct InjectArgs {
    /// Input trace path.
    #[arg(long)]
    pub trace: PathBuf,
    /// Output trace path.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of attacks to inject.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Minimum records between consecutive attacks.
    #[arg(long, default_value_t = 10)]
    pub min_gap: usize,
    #[arg(long)]
    pub seed: u64,
    /// Manifest path override.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MutateArgs {
    /// Input trace path.
    #[arg(long)]
    pub trace: PathBuf,
    /// Output trace path.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated record positions to disguise.
    #[arg(long, conflicts_with = "attacked")]
    pub positions: Option<String>,
    /// Disguise every attack-labeled record.
    #[arg(long)]
    pub attacked: bool,
    /// Manifest path override.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Detector selection shared by the classification commands.
#[derive(Debug, Args, Serialize)]
pub struct DetectorArgs {
    /// Detector backend: `oracle`, `mock:<replay-file>`, or `chat`.
    #[arg(long, default_value = "oracle")]
    pub detector: String,
    /// Chat endpoint URL; required with `--detector chat`.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name sent with each chat request.
    #[arg(long, default_value = "local")]
    pub model: String,
    /// Prompt shape for chat and mock detectors.
    #[arg(long, value_enum, default_value_t = ModeArg::Zeroshot)]
    pub mode: ModeArg,
    /// Ask for a one-line explanation with anomalous verdicts.
    #[arg(long)]
    pub explain: bool,
    /// Disable previous-message retrieval (oracle detector only).
    #[arg(long)]
    pub no_prev: bool,
    /// Request timeout for the chat backend.
    #[arg(long, default_value_t = 30_000)]
    pub timeout_ms: u64,
    /// Completion token cap for chat requests.
    #[arg(long, default_value_t = 256)]
    pub max_tokens: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Zeroshot,
    GenericCot,
    CustomCot,
}

impl From<ModeArg> for PromptMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Zeroshot => PromptMode::ZeroShot,
            ModeArg::GenericCot => PromptMode::GenericCot,
            ModeArg::CustomCot => PromptMode::CustomCot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    Exclude,
    Pessimistic,
}

impl From<PolicyArg> for UnclassifiedPolicy {
    fn from(policy: PolicyArg) -> Self {
        match policy {
            PolicyArg::Exclude => UnclassifiedPolicy::Exclude,
            PolicyArg::Pessimistic => UnclassifiedPolicy::Pessimistic,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct RunArgs {
    /// Input trace path.
    #[arg(long)]
    pub trace: PathBuf,
    /// Window size.
    #[arg(long, default_value_t = 1)]
    pub w: usize,
    /// Attack description file (JSON-lines); the first entry is used.
    #[arg(long)]
    pub desc: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub detector: DetectorArgs,
    /// How windows without a usable verdict enter the confusion tally.
    #[arg(long, value_enum, default_value_t = PolicyArg::Exclude)]
    pub unclassified_policy: PolicyArg,
    /// Latency bound the run is judged against.
    #[arg(long, default_value_t = 1_000)]
    pub bound_ms: u64,
    /// Write the full run result (JSON) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Debug aid: dump every formatted window as JSON-lines.
    #[arg(long)]
    pub dump_windows: Option<PathBuf>,
    /// Manifest path override.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Input trace path.
    #[arg(long)]
    pub trace: PathBuf,
    /// Window sizes: a single value, `lo..hi` (inclusive), or a comma list.
    #[arg(long = "w", alias = "w-range")]
    pub w: String,
    /// Attack description file (JSON-lines); the first entry is used.
    #[arg(long)]
    pub desc: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub detector: DetectorArgs,
    /// How windows without a usable verdict enter the confusion tally.
    #[arg(long, value_enum, default_value_t = PolicyArg::Exclude)]
    pub unclassified_policy: PolicyArg,
    /// Latency bound the runs are judged against.
    #[arg(long, default_value_t = 1_000)]
    pub bound_ms: u64,
    /// Write the per-size CSV table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the full run results (JSON) here for later reporting.
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// Manifest path override.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LintArgs {
    /// Description file (JSON-lines of name/body objects).
    #[arg(long)]
    pub desc: PathBuf,
    /// Also write completed descriptions (missing clauses appended).
    #[arg(long, requires = "out")]
    pub complete: bool,
    /// Output path for completed descriptions.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path override.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StudyArgs {
    /// Input trace path.
    #[arg(long)]
    pub trace: PathBuf,
    /// Description file (JSON-lines); every entry is scored.
    #[arg(long)]
    pub desc: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub detector: DetectorArgs,
    /// How windows without a usable verdict enter the confusion tally.
    #[arg(long, value_enum, default_value_t = PolicyArg::Exclude)]
    pub unclassified_policy: PolicyArg,
    /// Seed for the bootstrap confidence intervals.
    #[arg(long)]
    pub seed: u64,
    /// Directory receiving the study tables and JSON.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Manifest path override.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Run results JSON written by `run --out` or `sweep --results`.
    #[arg(long)]
    pub results: PathBuf,
    /// Directory receiving the rendered tables.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Latency bound the table is judged against.
    #[arg(long, default_value_t = 1_000)]
    pub bound_ms: u64,
    /// Manifest path override.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}
