//! Latency and quality statistics across runs.
//!
//! Percentiles use linear interpolation between order statistics with
//! `h = (n - 1) * q`. The same rule gives the cross-run median, so an odd
//! run count takes the middle value and an even count the midpoint.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::measurements::{
    CellKey, Latency, LatencyPercentiles, LatencyTrace, MeasurementRecord, ResourceAllocation,
    TokenUsage,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("{0}: no values")]
    Empty(&'static str),
    #[error("quantile {0} outside [0, 1]")]
    QuantileOutOfRange(f64),
    #[error("non-finite value {0} in input")]
    NonFinite(f64),
    #[error("warm-up count {warmup_count} leaves no samples out of {samples}")]
    WarmupExhaustsTrace { warmup_count: usize, samples: usize },
}

/// Mean ± std of one metric over runs. `std` uses the n − 1 denominator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub metric_name: String,
    pub mean: f64,
    pub std: f64,
    pub n_runs: usize,
    /// False for a single run: `std` is then reported as 0.
    pub std_defined: bool,
}

/// Drops the first `warmup_count` samples of a trace.
pub fn trim_warmup(trace: &LatencyTrace) -> Result<&[f64], StatsError> {
    if trace.warmup_count >= trace.samples_ms.len() {
        return Err(StatsError::WarmupExhaustsTrace {
            warmup_count: trace.warmup_count,
            samples: trace.samples_ms.len(),
        });
    }
    Ok(&trace.samples_ms[trace.warmup_count..])
}

/// Linear-interpolation quantile of `values` (any order) at fraction `q`.
pub fn percentile(values: &[f64], q: f64) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty("percentile"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(StatsError::QuantileOutOfRange(q));
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(bad));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, q))
}

fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(&hi) if frac > 0.0 => sorted[lo] + frac * (hi - sorted[lo]),
        _ => sorted[lo],
    }
}

/// Median of per-run percentile values.
pub fn aggregate_percentile_across_runs(per_run_values: &[f64]) -> Result<f64, StatsError> {
    if per_run_values.is_empty() {
        return Err(StatsError::Empty("aggregate_percentile_across_runs"));
    }
    percentile(per_run_values, 0.5)
}

pub fn summarize_mean_std(
    metric_name: impl Into<String>,
    per_run_values: &[f64],
) -> Result<RunSummary, StatsError> {
    let n = per_run_values.len();
    if n == 0 {
        return Err(StatsError::Empty("summarize_mean_std"));
    }
    if let Some(&bad) = per_run_values.iter().find(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(bad));
    }
    let mean = per_run_values.iter().sum::<f64>() / n as f64;
    let (std, std_defined) = if n >= 2 {
        let ss: f64 = per_run_values.iter().map(|x| (x - mean).powi(2)).sum();
        ((ss / (n - 1) as f64).sqrt(), true)
    } else {
        (0.0, false)
    };
    Ok(RunSummary {
        metric_name: metric_name.into(),
        mean,
        std,
        n_runs: n,
        std_defined,
    })
}

/// p50/p95/p99 of a raw trace after warm-up trimming.
pub fn percentiles_of_trace(trace: &LatencyTrace) -> Result<LatencyPercentiles, StatsError> {
    let kept = trim_warmup(trace)?;
    let mut sorted = kept.to_vec();
    if let Some(&bad) = sorted.iter().find(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(bad));
    }
    sorted.sort_by(f64::total_cmp);
    Ok(LatencyPercentiles {
        p50_ms: percentile_sorted(&sorted, 0.50),
        p95_ms: percentile_sorted(&sorted, 0.95),
        p99_ms: percentile_sorted(&sorted, 0.99),
    })
}

pub fn run_percentiles(latency: &Latency) -> Result<LatencyPercentiles, StatsError> {
    match latency {
        Latency::Trace(trace) => percentiles_of_trace(trace),
        Latency::Percentiles(p) => Ok(*p),
    }
}

/// Median of each percentile across runs, taken independently per level.
pub fn aggregate_run_percentiles(
    runs: &[LatencyPercentiles],
) -> Result<LatencyPercentiles, StatsError> {
    let column = |f: fn(&LatencyPercentiles) -> f64| -> Result<f64, StatsError> {
        let values: Vec<f64> = runs.iter().map(f).collect();
        aggregate_percentile_across_runs(&values)
    };
    Ok(LatencyPercentiles {
        p50_ms: column(|p| p.p50_ms)?,
        p95_ms: column(|p| p.p95_ms)?,
        p99_ms: column(|p| p.p99_ms)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualitySummary {
    pub f1_macro: RunSummary,
    pub precision_macro: RunSummary,
    pub recall_macro: RunSummary,
    pub accuracy: RunSummary,
}

/// All runs of one model configuration on one dataset, reduced to the
/// figures that costing and selection consume.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellAggregate {
    pub key: CellKey,
    pub n_runs: usize,
    pub quality: QualitySummary,
    pub latency: LatencyPercentiles,
    pub ttft: Option<LatencyPercentiles>,
    /// Mean of per-run token averages.
    pub tokens: Option<TokenUsage>,
    /// Allocation of the first run.
    pub resources: Option<ResourceAllocation>,
}

/// Groups records by [`CellKey`] and aggregates each group.
///
/// A repeated `run_id` within a group keeps its first occurrence only.
/// Output is sorted by key.
pub fn aggregate_records(records: &[MeasurementRecord]) -> Result<Vec<CellAggregate>, StatsError> {
    let mut groups: BTreeMap<CellKey, Vec<&MeasurementRecord>> = BTreeMap::new();
    for record in records {
        let runs = groups.entry(record.key()).or_default();
        if !runs.iter().any(|r| r.run_id() == record.run_id()) {
            runs.push(record);
        }
    }
    groups
        .into_iter()
        .map(|(key, runs)| aggregate_cell(key, &runs))
        .collect()
}

fn aggregate_cell(key: CellKey, runs: &[&MeasurementRecord]) -> Result<CellAggregate, StatsError> {
    let metric = |name: &str, f: fn(&MeasurementRecord) -> f64| {
        let values: Vec<f64> = runs.iter().map(|r| f(r)).collect();
        summarize_mean_std(name, &values)
    };
    let quality = QualitySummary {
        f1_macro: metric("f1_macro", |r| r.quality().f1_macro)?,
        precision_macro: metric("precision_macro", |r| r.quality().precision_macro)?,
        recall_macro: metric("recall_macro", |r| r.quality().recall_macro)?,
        accuracy: metric("accuracy", |r| r.quality().accuracy)?,
    };

    let latency_runs = runs
        .iter()
        .map(|r| run_percentiles(r.latency()))
        .collect::<Result<Vec<_>, _>>()?;
    let latency = aggregate_run_percentiles(&latency_runs)?;

    let ttft_runs = runs
        .iter()
        .filter_map(|r| r.ttft())
        .map(run_percentiles)
        .collect::<Result<Vec<_>, _>>()?;
    let ttft = if ttft_runs.is_empty() {
        None
    } else {
        Some(aggregate_run_percentiles(&ttft_runs)?)
    };

    let token_runs: Vec<&TokenUsage> = runs.iter().filter_map(|r| r.tokens()).collect();
    let tokens = (!token_runs.is_empty()).then(|| {
        let n = token_runs.len() as f64;
        TokenUsage {
            avg_input_tokens_per_request: token_runs
                .iter()
                .map(|t| t.avg_input_tokens_per_request)
                .sum::<f64>()
                / n,
            avg_output_tokens_per_request: token_runs
                .iter()
                .map(|t| t.avg_output_tokens_per_request)
                .sum::<f64>()
                / n,
        }
    });

    Ok(CellAggregate {
        key,
        n_runs: runs.len(),
        quality,
        latency,
        ttft,
        tokens,
        resources: runs.iter().find_map(|r| r.resources().copied()),
    })
}
