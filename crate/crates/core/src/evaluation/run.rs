//! Detection runs over traces: single runs, window-size sweeps and the
//! description-sensitivity study.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::stats::{bootstrap_ci_mean, cliffs_delta, kendall_tau_b, mean, percentile, spearman,
    LatencyStats};
use super::{ConfusionCounts, Metrics, SampleStatus, UnclassifiedPolicy};
use crate::detector::WindowDetector;
use crate::error::{Error, Result};
use crate::l3::{MessageFields, TelemetryRecord};
use crate::preprocess::{WindowBuilder, WindowConfig, WindowLabel};
use crate::prompting::{
    classify_alignment, lint_description, AlignmentGroup, AttackDescription, PredicateCoverage,
};

/// One window's outcome within a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowSample {
    /// Sequence number of the window's new record.
    pub position: u64,
    pub label: WindowLabel,
    pub status: SampleStatus,
    /// Round-trip time for answered requests; absent for failed ones.
    pub latency: Option<Duration>,
    pub explanation: Option<String>,
    pub error: Option<String>,
}

/// A completed detection run at one window size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub w: usize,
    pub windows: usize,
    pub attacked_windows: usize,
    pub counts: ConfusionCounts,
    pub samples: Vec<WindowSample>,
}

impl RunResult {
    pub fn metrics(&self) -> Result<Metrics> {
        self.counts.metrics()
    }

    /// Latency summary over answered requests.
    pub fn latency_stats(&self, bound: Duration) -> Result<LatencyStats> {
        let latencies: Vec<Duration> = self.samples.iter().filter_map(|s| s.latency).collect();
        LatencyStats::from_durations(&latencies, bound)
    }
}

/// Streams the trace through windowing and the detector, in record order.
///
/// The detector sees each window together with the fields of every record
/// before the window's new message. Failed backend requests become failed
/// samples instead of aborting the run; any other error aborts.
pub fn run_detection(
    trace: &[TelemetryRecord],
    config: WindowConfig,
    detector: &mut dyn WindowDetector,
    policy: UnclassifiedPolicy,
) -> Result<RunResult> {
    if trace.len() < config.w() {
        return Err(Error::InsufficientData {
            records: trace.len(),
            w: config.w(),
        });
    }
    let mut builder = WindowBuilder::new(config);
    let mut prefix: Vec<MessageFields> = Vec::with_capacity(trace.len());
    let mut samples = Vec::new();
    for record in trace {
        if let Some(window) = builder.push(record) {
            let sample = match detector.classify(&window, &prefix) {
                Ok(detection) => WindowSample {
                    position: window.position,
                    label: window.label,
                    status: detection
                        .verdict
                        .map_or(SampleStatus::Unclassified, SampleStatus::Classified),
                    latency: Some(detection.latency),
                    explanation: detection.explanation,
                    error: None,
                },
                Err(err @ Error::Backend { .. }) => WindowSample {
                    position: window.position,
                    label: window.label,
                    status: SampleStatus::Failed,
                    latency: None,
                    explanation: None,
                    error: Some(err.to_string()),
                },
                Err(other) => return Err(other),
            };
            samples.push(sample);
        }
        prefix.push(record.fields());
    }
    let statuses: Vec<SampleStatus> = samples.iter().map(|s| s.status).collect();
    let labels: Vec<WindowLabel> = samples.iter().map(|s| s.label).collect();
    let counts = ConfusionCounts::tally(&statuses, &labels, policy)?;
    Ok(RunResult {
        w: config.w(),
        windows: samples.len(),
        attacked_windows: labels.iter().filter(|l| **l == WindowLabel::Attacked).count(),
        counts,
        samples,
    })
}

/// Runs one detection pass per window size, ascending. Duplicate sizes are
/// collapsed; the factory builds a fresh detector for each size.
pub fn sweep_windows(
    trace: &[TelemetryRecord],
    w_values: impl IntoIterator<Item = usize>,
    factory: &mut dyn FnMut(usize) -> Result<Box<dyn WindowDetector>>,
    policy: UnclassifiedPolicy,
) -> Result<Vec<RunResult>> {
    let mut sizes: Vec<usize> = w_values.into_iter().collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut results = Vec::with_capacity(sizes.len());
    for w in sizes {
        let config = WindowConfig::new(w)?;
        let mut detector = factory(w)?;
        results.push(run_detection(trace, config, detector.as_mut(), policy)?);
    }
    Ok(results)
}

/// One description's trip through the sensitivity study.
#[derive(Debug, Clone, Serialize)]
pub struct StudyEntry {
    pub description: AttackDescription,
    pub coverage: PredicateCoverage,
    pub group: AlignmentGroup,
    pub predicates_satisfied: usize,
    pub body_chars: usize,
    pub f1: f64,
    /// Score after predicate-driven completion of the body.
    pub f1_completed: f64,
    pub group_completed: AlignmentGroup,
}

/// Per-group score summary; only groups with members are reported.
#[derive(Debug, Clone, Serialize)]
pub struct GroupStats {
    pub group: AlignmentGroup,
    pub n: usize,
    pub mean_f1: f64,
    pub median_f1: f64,
    pub p10_f1: f64,
    /// Fraction of members scoring exactly 1.
    pub perfect_fraction: f64,
    /// Percentile-bootstrap 95% interval for the mean.
    pub ci95_mean_f1: (f64, f64),
}

/// A correlation that may have no defined value: a study where every
/// description scores the same has no rank correlation, and the note says
/// why instead of failing the study.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationOutcome {
    pub value: Option<f64>,
    pub note: Option<String>,
}

impl CorrelationOutcome {
    fn from_result(result: Result<f64>) -> Self {
        match result {
            Ok(value) => CorrelationOutcome {
                value: Some(value),
                note: None,
            },
            Err(err) => CorrelationOutcome {
                value: None,
                note: Some(err.to_string()),
            },
        }
    }
}

/// Outcome of a description-sensitivity study.
#[derive(Debug, Clone, Serialize)]
pub struct StudyResult {
    pub entries: Vec<StudyEntry>,
    pub groups: Vec<GroupStats>,
    /// Rank correlation between satisfied-predicate count and score.
    pub spearman_predicates_f1: CorrelationOutcome,
    /// Tie-corrected rank correlation between satisfied-predicate count and
    /// score.
    pub kendall_predicates_f1: CorrelationOutcome,
    /// Rank correlation between body length in characters and score.
    pub spearman_length_f1: CorrelationOutcome,
    /// Effect size of each aligned group's scores against the not-aligned
    /// group; empty when no description landed in the not-aligned group.
    pub cliffs_vs_not_aligned: Vec<(AlignmentGroup, f64)>,
    pub mean_completion_gain: f64,
}

const STUDY_BOOTSTRAP_RESAMPLES: usize = 1000;

/// A run's score for study purposes: a run whose every window went
/// unanswered scores zero rather than erroring out.
fn study_f1(
    trace: &[TelemetryRecord],
    config: WindowConfig,
    detector: &mut dyn WindowDetector,
    policy: UnclassifiedPolicy,
) -> Result<f64> {
    let result = run_detection(trace, config, detector, policy)?;
    match result.counts.metrics() {
        Ok(metrics) => Ok(metrics.f1),
        Err(Error::UndefinedMetrics) => Ok(0.0),
        Err(other) => Err(other),
    }
}

/// Scores every description at window size 1, groups the results by
/// alignment and summarizes how wording quality tracks detection quality.
pub fn sensitivity_study(
    trace: &[TelemetryRecord],
    descriptions: &[AttackDescription],
    factory: &mut dyn FnMut(&AttackDescription) -> Result<Box<dyn WindowDetector>>,
    policy: UnclassifiedPolicy,
    seed: u64,
) -> Result<StudyResult> {
    if descriptions.is_empty() {
        return Err(Error::EmptySamples);
    }
    let config = WindowConfig::new(1)?;
    let mut entries = Vec::with_capacity(descriptions.len());
    for description in descriptions {
        let coverage = lint_description(&description.body);
        let mut detector = factory(description)?;
        let f1 = study_f1(trace, config, detector.as_mut(), policy)?;
        let completed = description.completed();
        let mut completed_detector = factory(&completed)?;
        let f1_completed = study_f1(trace, config, completed_detector.as_mut(), policy)?;
        entries.push(StudyEntry {
            coverage,
            group: classify_alignment(coverage),
            predicates_satisfied: coverage.satisfied(),
            body_chars: description.body.chars().count(),
            f1,
            f1_completed,
            group_completed: classify_alignment(lint_description(&completed.body)),
            description: description.clone(),
        });
    }

    let mut groups = Vec::new();
    for (idx, group) in AlignmentGroup::ALL.into_iter().enumerate() {
        let scores: Vec<f64> = entries
            .iter()
            .filter(|e| e.group == group)
            .map(|e| e.f1)
            .collect();
        if scores.is_empty() {
            continue;
        }
        let perfect = scores.iter().filter(|s| (**s - 1.0).abs() < 1e-9).count();
        groups.push(GroupStats {
            group,
            n: scores.len(),
            mean_f1: mean(&scores)?,
            median_f1: percentile(&scores, 0.50)?,
            p10_f1: percentile(&scores, 0.10)?,
            perfect_fraction: perfect as f64 / scores.len() as f64,
            ci95_mean_f1: bootstrap_ci_mean(
                &scores,
                STUDY_BOOTSTRAP_RESAMPLES,
                0.95,
                seed.wrapping_add(idx as u64),
            )?,
        });
    }

    let predicates: Vec<f64> = entries.iter().map(|e| e.predicates_satisfied as f64).collect();
    let lengths: Vec<f64> = entries.iter().map(|e| e.body_chars as f64).collect();
    let scores: Vec<f64> = entries.iter().map(|e| e.f1).collect();
    let spearman_predicates_f1 = CorrelationOutcome::from_result(spearman(&predicates, &scores));
    let kendall_predicates_f1 =
        CorrelationOutcome::from_result(kendall_tau_b(&predicates, &scores));
    let spearman_length_f1 = CorrelationOutcome::from_result(spearman(&lengths, &scores));

    let not_scores: Vec<f64> = entries
        .iter()
        .filter(|e| e.group == AlignmentGroup::NotAligned)
        .map(|e| e.f1)
        .collect();
    let mut cliffs_vs_not_aligned = Vec::new();
    if !not_scores.is_empty() {
        for group in [
            AlignmentGroup::DirectlyAligned,
            AlignmentGroup::CloselyAligned,
            AlignmentGroup::SomewhatAligned,
        ] {
            let group_scores: Vec<f64> = entries
                .iter()
                .filter(|e| e.group == group)
                .map(|e| e.f1)
                .collect();
            if !group_scores.is_empty() {
                cliffs_vs_not_aligned.push((group, cliffs_delta(&group_scores, &not_scores)?));
            }
        }
    }

    let gains: Vec<f64> = entries.iter().map(|e| e.f1_completed - e.f1).collect();
    Ok(StudyResult {
        mean_completion_gain: mean(&gains)?,
        entries,
        groups,
        spearman_predicates_f1,
        kendall_predicates_f1,
        spearman_length_f1,
        cliffs_vs_not_aligned,
    })
}
