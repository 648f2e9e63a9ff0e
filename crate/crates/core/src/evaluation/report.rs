//! Plain-CSV rendering of run, sweep, latency and study results.

use crate::error::{Error, Result};
use crate::evaluation::{LatencyStats, RunResult, StudyResult};

/// Column order of [`sweep_csv`].
pub const SWEEP_HEADER: &str =
    "w,windows,attacked,tp,fp,tn,fn,unclassified,failed,accuracy,precision,recall,f1,fpr,fnr";

/// One row per run, metrics to six decimal places.
pub fn sweep_csv(results: &[RunResult]) -> Result<String> {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for result in results {
        let c = &result.counts;
        let m = result.metrics()?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            result.w,
            result.windows,
            result.attacked_windows,
            c.true_positives,
            c.false_positives,
            c.true_negatives,
            c.false_negatives,
            c.unclassified,
            c.failed,
            m.accuracy,
            m.precision,
            m.recall,
            m.f1,
            m.false_positive_rate,
            m.false_negative_rate,
        ));
    }
    Ok(out)
}

/// Row order of the latency table.
const LATENCY_ROWS: [&str; 8] = [
    "mean_ms",
    "median_ms",
    "p90_ms",
    "p95_ms",
    "p99_ms",
    "max_ms",
    "min_ms",
    "under_bound_pct",
];

/// One labelled column of the latency comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyColumn {
    pub label: String,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p90_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
    pub min_ms: f64,
    /// Percentage of requests strictly under the latency bound.
    pub under_bound_pct: f64,
}

impl LatencyColumn {
    pub fn from_stats(label: impl Into<String>, stats: &LatencyStats) -> Self {
        LatencyColumn {
            label: label.into(),
            mean_ms: stats.mean_ms,
            median_ms: stats.median_ms,
            p90_ms: stats.p90_ms,
            p95_ms: stats.p95_ms,
            p99_ms: stats.p99_ms,
            max_ms: stats.max_ms,
            min_ms: stats.min_ms,
            under_bound_pct: stats.frac_under_bound * 100.0,
        }
    }

    fn value(&self, row: &str) -> f64 {
        match row {
            "mean_ms" => self.mean_ms,
            "median_ms" => self.median_ms,
            "p90_ms" => self.p90_ms,
            "p95_ms" => self.p95_ms,
            "p99_ms" => self.p99_ms,
            "max_ms" => self.max_ms,
            "min_ms" => self.min_ms,
            "under_bound_pct" => self.under_bound_pct,
            _ => unreachable!("row names come from LATENCY_ROWS"),
        }
    }

    fn set(&mut self, row: &str, value: f64) {
        match row {
            "mean_ms" => self.mean_ms = value,
            "median_ms" => self.median_ms = value,
            "p90_ms" => self.p90_ms = value,
            "p95_ms" => self.p95_ms = value,
            "p99_ms" => self.p99_ms = value,
            "max_ms" => self.max_ms = value,
            "min_ms" => self.min_ms = value,
            "under_bound_pct" => self.under_bound_pct = value,
            _ => unreachable!("row names come from LATENCY_ROWS"),
        }
    }

    fn empty(label: &str) -> Self {
        LatencyColumn {
            label: label.to_string(),
            mean_ms: 0.0,
            median_ms: 0.0,
            p90_ms: 0.0,
            p95_ms: 0.0,
            p99_ms: 0.0,
            max_ms: 0.0,
            min_ms: 0.0,
            under_bound_pct: 0.0,
        }
    }
}

/// Latency comparison across detector configurations, metric per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyTable {
    pub columns: Vec<LatencyColumn>,
}

/// Renders the table as CSV, values to two decimal places.
pub fn render_latency_table(table: &LatencyTable) -> String {
    let mut out = String::from("metric");
    for column in &table.columns {
        out.push(',');
        out.push_str(&column.label);
    }
    out.push('\n');
    for row in LATENCY_ROWS {
        out.push_str(row);
        for column in &table.columns {
            out.push_str(&format!(",{:.2}", column.value(row)));
        }
        out.push('\n');
    }
    out
}

/// Parses a table rendered by [`render_latency_table`]. Rows must appear in
/// the canonical order with one value per column.
pub fn parse_latency_table(text: &str) -> Result<LatencyTable> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::MalformedLine {
        line: 1,
        reason: "empty latency table".to_string(),
    })?;
    let mut fields = header.split(',');
    if fields.next() != Some("metric") {
        return Err(Error::MalformedLine {
            line: 1,
            reason: "header must start with `metric`".to_string(),
        });
    }
    let mut columns: Vec<LatencyColumn> = fields.map(LatencyColumn::empty).collect();
    if columns.is_empty() {
        return Err(Error::MalformedLine {
            line: 1,
            reason: "table has no value columns".to_string(),
        });
    }
    for expected in LATENCY_ROWS {
        let (idx, line) = lines.next().ok_or_else(|| Error::MalformedLine {
            line: LATENCY_ROWS.len() + 1,
            reason: format!("missing row `{expected}`"),
        })?;
        let mut fields = line.split(',');
        let row = fields.next().unwrap_or_default();
        if row != expected {
            return Err(Error::MalformedLine {
                line: idx + 1,
                reason: format!("expected row `{expected}`, found `{row}`"),
            });
        }
        for column in columns.iter_mut() {
            let raw = fields.next().ok_or_else(|| Error::MalformedLine {
                line: idx + 1,
                reason: format!("row `{expected}` is short a value"),
            })?;
            let value: f64 = raw.parse().map_err(|_| Error::MalformedLine {
                line: idx + 1,
                reason: format!("`{raw}` is not a number"),
            })?;
            column.set(expected, value);
        }
        if fields.next().is_some() {
            return Err(Error::MalformedLine {
                line: idx + 1,
                reason: format!("row `{expected}` has extra values"),
            });
        }
    }
    Ok(LatencyTable { columns })
}

/// One row per studied description.
pub fn study_entries_csv(study: &StudyResult) -> String {
    let mut out = String::from("index,group,predicates,chars,f1,f1_completed,group_completed\n");
    for (idx, entry) in study.entries.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{}\n",
            idx,
            entry.group.as_str(),
            entry.predicates_satisfied,
            entry.body_chars,
            entry.f1,
            entry.f1_completed,
            entry.group_completed.as_str(),
        ));
    }
    out
}

/// One row per correlation; absent values render an empty cell plus the
/// reason in the note column.
pub fn study_correlations_csv(study: &StudyResult) -> String {
    let mut out = String::from("correlation,value,note\n");
    let rows = [
        ("spearman_predicates_f1", &study.spearman_predicates_f1),
        ("kendall_predicates_f1", &study.kendall_predicates_f1),
        ("spearman_length_f1", &study.spearman_length_f1),
    ];
    for (name, outcome) in rows {
        let value = outcome
            .value
            .map(|v| format!("{v:.6}"))
            .unwrap_or_default();
        let note = outcome.note.as_deref().unwrap_or_default();
        out.push_str(&format!("{name},{value},{note}\n"));
    }
    for (group, delta) in &study.cliffs_vs_not_aligned {
        out.push_str(&format!(
            "cliffs_delta_{}_vs_not,{:.6},\n",
            group.as_str(),
            delta
        ));
    }
    out
}

/// One row per populated alignment group.
pub fn study_groups_csv(study: &StudyResult) -> String {
    let mut out =
        String::from("group,n,mean_f1,median_f1,p10_f1,perfect_fraction,ci95_low,ci95_high\n");
    for group in &study.groups {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            group.group.as_str(),
            group.n,
            group.mean_f1,
            group.median_f1,
            group.p10_f1,
            group.perfect_fraction,
            group.ci95_mean_f1.0,
            group.ci95_mean_f1.1,
        ));
    }
    out
}
