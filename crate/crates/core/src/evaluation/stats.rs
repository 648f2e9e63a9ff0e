//! Order statistics, resampling intervals, rank correlations and effect
//! sizes. Everything here is deterministic given its inputs (and seed).

use std::cmp::Ordering;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Arithmetic mean.
pub fn mean(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Nearest-rank percentile: the smallest sample such that at least `p` of
/// the set is at or below it. `p` is a fraction in `[0, 1]`; `p = 0` yields
/// the minimum, `p = 1` the maximum. No interpolation.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config(format!("percentile fraction {p} outside [0, 1]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

/// Latency summary in milliseconds over one batch of measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p90_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
    pub min_ms: f64,
    /// Fraction of measurements strictly under `bound_ms`.
    pub frac_under_bound: f64,
    pub bound_ms: f64,
}

impl LatencyStats {
    pub fn from_durations(latencies: &[Duration], bound: Duration) -> Result<Self> {
        let ms: Vec<f64> = latencies.iter().map(|d| d.as_secs_f64() * 1000.0).collect();
        Self::from_millis(&ms, bound.as_secs_f64() * 1000.0)
    }

    pub fn from_millis(ms: &[f64], bound_ms: f64) -> Result<Self> {
        if ms.is_empty() {
            return Err(Error::EmptySamples);
        }
        let under = ms.iter().filter(|&&m| m < bound_ms).count();
        Ok(LatencyStats {
            mean_ms: mean(ms)?,
            median_ms: percentile(ms, 0.50)?,
            p90_ms: percentile(ms, 0.90)?,
            p95_ms: percentile(ms, 0.95)?,
            p99_ms: percentile(ms, 0.99)?,
            max_ms: percentile(ms, 1.0)?,
            min_ms: percentile(ms, 0.0)?,
            frac_under_bound: under as f64 / ms.len() as f64,
            bound_ms,
        })
    }
}

/// Percentile-bootstrap confidence interval for the mean: `resamples`
/// with-replacement resamples of the full sample, nearest-rank percentiles
/// of the resampled means at `(1 - level) / 2` and `(1 + level) / 2`.
pub fn bootstrap_ci_mean(
    samples: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if resamples == 0 {
        return Err(Error::config("bootstrap needs at least one resample"));
    }
    if !(0.0..1.0).contains(&level) || level <= 0.0 {
        return Err(Error::config(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += samples[rng.random_range(0..n)];
        }
        means.push(sum / n as f64);
    }
    let lower = percentile(&means, (1.0 - level) / 2.0)?;
    let upper = percentile(&means, (1.0 + level) / 2.0)?;
    Ok((lower, upper))
}

/// Ranks with ties sharing their average position, 1-based.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let shared = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = shared;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx).powi(2);
        vy += (b - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::UndefinedCorrelation {
            reason: "an input has zero variance".to_string(),
        });
    }
    Ok(cov / (vx * vy).sqrt())
}

fn check_paired(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            outcomes: x.len(),
            labels: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation {
            reason: "fewer than two pairs".to_string(),
        });
    }
    Ok(())
}

/// Spearman rank correlation: Pearson over average ranks. Ties share their
/// average rank; a constant input has no defined value.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_paired(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Kendall rank correlation with the tie correction (the `b` variant).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    check_paired(x, y)?;
    let n = x.len();
    let mut concordant = 0u64;
    let mut discordant = 0u64;
    let mut tied_x = 0u64;
    let mut tied_y = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i].total_cmp(&x[j]);
            let dy = y[i].total_cmp(&y[j]);
            if dx == Ordering::Equal {
                tied_x += 1;
            }
            if dy == Ordering::Equal {
                tied_y += 1;
            }
            if dx != Ordering::Equal && dy != Ordering::Equal {
                if dx == dy {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let denom = ((pairs - tied_x as f64) * (pairs - tied_y as f64)).sqrt();
    if denom == 0.0 {
        return Err(Error::UndefinedCorrelation {
            reason: "all pairs tied in one input".to_string(),
        });
    }
    Ok((concordant as f64 - discordant as f64) / denom)
}

/// Cliff's delta effect size: probability of a draw from `a` exceeding one
/// from `b`, minus the reverse. Ranges over `[-1, 1]`; 0 means overlap.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut greater = 0u64;
    let mut less = 0u64;
    for va in a {
        for vb in b {
            match va.total_cmp(vb) {
                Ordering::Greater => greater += 1,
                Ordering::Less => less += 1,
                Ordering::Equal => {}
            }
        }
    }
    let pairs = (a.len() * b.len()) as f64;
    Ok((greater as f64 - less as f64) / pairs)
}
