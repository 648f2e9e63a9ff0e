//! Detection quality accounting: confusion tallies, derived metrics,
//! latency statistics, evaluation runs and report rendering.

pub mod report;
mod run;
mod stats;

pub use run::{
    run_detection, sensitivity_study, sweep_windows, CorrelationOutcome, GroupStats, RunResult,
    StudyEntry, StudyResult, WindowSample,
};
pub use stats::{
    bootstrap_ci_mean, cliffs_delta, kendall_tau_b, mean, percentile, spearman, LatencyStats,
};

use serde::{Deserialize, Serialize};

use crate::detector::Verdict;
use crate::error::{Error, Result};
use crate::preprocess::WindowLabel;

/// What became of one window's classification attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleStatus {
    /// The backend answered with a recognizable class word.
    Classified(Verdict),
    /// The backend answered, but no class word could be extracted.
    Unclassified,
    /// The request itself failed.
    Failed,
}

impl SampleStatus {
    pub fn verdict(&self) -> Option<Verdict> {
        match self {
            SampleStatus::Classified(v) => Some(*v),
            _ => None,
        }
    }
}

/// How unclassifiable replies enter the confusion tally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnclassifiedPolicy {
    /// Keep them out of the four cells, count them separately.
    #[default]
    Exclude,
    /// Score them as the wrong answer for their window's label.
    Pessimistic,
}

/// Binary confusion tally plus the two non-answer buckets. The six fields
/// always sum to the number of tallied windows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
    pub unclassified: u64,
    pub failed: u64,
}

impl ConfusionCounts {
    /// Tallies classification outcomes against window labels. Anomalous is
    /// the positive class.
    pub fn tally(
        statuses: &[SampleStatus],
        labels: &[WindowLabel],
        policy: UnclassifiedPolicy,
    ) -> Result<Self> {
        if statuses.len() != labels.len() {
            return Err(Error::LengthMismatch {
                outcomes: statuses.len(),
                labels: labels.len(),
            });
        }
        let mut counts = ConfusionCounts::default();
        for (status, label) in statuses.iter().zip(labels) {
            let attacked = *label == WindowLabel::Attacked;
            match status {
                SampleStatus::Classified(Verdict::Anomalous) if attacked => {
                    counts.true_positives += 1
                }
                SampleStatus::Classified(Verdict::Anomalous) => counts.false_positives += 1,
                SampleStatus::Classified(Verdict::Normal) if attacked => {
                    counts.false_negatives += 1
                }
                SampleStatus::Classified(Verdict::Normal) => counts.true_negatives += 1,
                SampleStatus::Unclassified => match policy {
                    UnclassifiedPolicy::Exclude => counts.unclassified += 1,
                    UnclassifiedPolicy::Pessimistic if attacked => counts.false_negatives += 1,
                    UnclassifiedPolicy::Pessimistic => counts.false_positives += 1,
                },
                SampleStatus::Failed => counts.failed += 1,
            }
        }
        Ok(counts)
    }

    /// Windows that landed in one of the four confusion cells.
    pub fn classified(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }

    /// All tallied windows, non-answers included.
    pub fn total(&self) -> u64 {
        self.classified() + self.unclassified + self.failed
    }

    /// Derives the six quality metrics. Ratios with an empty denominator are
    /// 0; a tally with no classified windows at all has no metrics.
    pub fn metrics(&self) -> Result<Metrics> {
        if self.classified() == 0 {
            return Err(Error::UndefinedMetrics);
        }
        let tp = self.true_positives as f64;
        let fp = self.false_positives as f64;
        let tn = self.true_negatives as f64;
        let fne = self.false_negatives as f64;
        let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fne);
        Ok(Metrics {
            accuracy: (tp + tn) / self.classified() as f64,
            precision,
            recall,
            f1: ratio(2.0 * precision * recall, precision + recall),
            false_positive_rate: ratio(fp, fp + tn),
            false_negative_rate: ratio(fne, fne + tp),
        })
    }
}

/// Quality metrics derived from a confusion tally; anomalous is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub false_positive_rate: f64,
    pub false_negative_rate: f64,
}
