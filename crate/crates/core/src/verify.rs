//! Golden-table regression: recompute costs, utilities and ranks from a
//! record set and compare them cell by cell against expected tables.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analysis::{Analysis, CostPrecision};
use crate::costing::PricingSnapshot;
use crate::measurements::{candidate_label, CellKey, MeasurementRecord, Paradigm};
use crate::Error;

/// Allowed |expected − actual| for USD per 1M requests.
pub const COST_TOLERANCE_USD: f64 = 0.02;
/// Allowed |expected − actual| for 100·U display values.
pub const UTILITY_DISPLAY_TOLERANCE: f64 = 0.01;

// Tolerances are compared with a little slack so that a difference of
// exactly 0.01 in decimal is not rejected because of binary rounding.
const FLOAT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedCost {
    pub dataset_id: String,
    pub model_id: String,
    pub paradigm: Paradigm,
    pub usd_per_million_requests: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedUtility {
    pub dataset_id: String,
    pub model_id: String,
    pub paradigm: Paradigm,
    pub tau_ms: f64,
    pub display_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<u32>,
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(source: &str, what: &str) -> Result<Vec<T>, Error> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut de = serde_json::Deserializer::from_str(line);
        let row = serde_path_to_error::deserialize(&mut de).map_err(|e| Error::Fixture {
            path: format!("{what} line {}", idx + 1),
            message: format!("{} (at `{}`)", e.inner(), e.path()),
        })?;
        out.push(row);
    }
    Ok(out)
}

pub fn parse_expected_costs(source: &str) -> Result<Vec<ExpectedCost>, Error> {
    parse_jsonl(source, "expected costs")
}

pub fn parse_expected_utilities(source: &str) -> Result<Vec<ExpectedUtility>, Error> {
    parse_jsonl(source, "expected utilities")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Cost,
    Utility,
    Rank,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellCheck {
    pub kind: CheckKind,
    pub dataset_id: String,
    pub candidate: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_ms: Option<f64>,
    pub expected: f64,
    /// `None` when the cell could not be computed at all.
    pub actual: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl CellCheck {
    pub fn describe(&self) -> String {
        let tau = self.tau_ms.map(|t| format!(" tau={t}")).unwrap_or_default();
        let actual = match self.actual {
            Some(a) if self.kind == CheckKind::Rank => format!("{a}"),
            Some(a) => format!("{a:.4}"),
            None => "missing".to_string(),
        };
        format!(
            "{:?} {}/{}{tau}: expected {} actual {actual} (tolerance {})",
            self.kind, self.dataset_id, self.candidate, self.expected, self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CellCheck>,
    pub warnings: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn count(&self, kind: CheckKind) -> (usize, usize) {
        let of_kind = self.checks.iter().filter(|c| c.kind == kind);
        let total = of_kind.clone().count();
        (of_kind.filter(|c| c.passed).count(), total)
    }
}

fn within(expected: f64, actual: f64, tolerance: f64) -> bool {
    (expected - actual).abs() <= tolerance + FLOAT_SLACK
}

/// Recomputes every expected cell from `records` under `snapshot`.
///
/// Rank checks run only when every expected utility row carries a rank;
/// otherwise they are skipped with a warning.
pub fn verify(
    records: &[MeasurementRecord],
    snapshot: &PricingSnapshot,
    expected_costs: &[ExpectedCost],
    expected_utilities: &[ExpectedUtility],
    precision: CostPrecision,
) -> Result<VerificationReport, Error> {
    let analysis = Analysis::new(records, snapshot)?;
    let mut checks = Vec::new();
    let mut warnings: Vec<String> = analysis.warnings.iter().map(|w| w.to_string()).collect();

    let costs: BTreeMap<CellKey, f64> = analysis
        .cells
        .iter()
        .map(|c| (c.key().clone(), c.cost.usd_per_million_requests))
        .collect();
    for e in expected_costs {
        let key = CellKey::new(&e.dataset_id, &e.model_id, e.paradigm);
        let actual = costs.get(&key).copied();
        checks.push(CellCheck {
            kind: CheckKind::Cost,
            dataset_id: e.dataset_id.clone(),
            candidate: key.label(),
            tau_ms: None,
            expected: e.usd_per_million_requests,
            actual,
            tolerance: COST_TOLERANCE_USD,
            passed: actual
                .is_some_and(|a| within(e.usd_per_million_requests, a, COST_TOLERANCE_USD)),
        });
    }

    let check_ranks = expected_utilities.iter().all(|e| e.rank.is_some());
    if !check_ranks && !expected_utilities.is_empty() {
        warnings.push("expected utilities lack a rank column; rank checks skipped".to_string());
    }

    // (dataset, tau bits, label) -> (display, rank)
    let mut computed: BTreeMap<(String, u64, String), (f64, u32)> = BTreeMap::new();
    let wanted: BTreeSet<(String, u64)> = expected_utilities
        .iter()
        .map(|e| (e.dataset_id.clone(), e.tau_ms.to_bits()))
        .collect();
    for (dataset, tau_bits) in &wanted {
        if !analysis.has_dataset(dataset) {
            continue;
        }
        let tau = f64::from_bits(*tau_bits);
        let sweep = analysis.tau_sweep(dataset, &[tau], precision)?;
        for score in &sweep.columns[0].scores {
            computed.insert(
                (dataset.clone(), *tau_bits, score.candidate.label()),
                (score.display_value, score.rank.unwrap_or(0)),
            );
        }
    }

    for e in expected_utilities {
        let label = candidate_label(&e.model_id, e.paradigm);
        let got = computed
            .get(&(e.dataset_id.clone(), e.tau_ms.to_bits(), label.clone()))
            .copied();
        checks.push(CellCheck {
            kind: CheckKind::Utility,
            dataset_id: e.dataset_id.clone(),
            candidate: label.clone(),
            tau_ms: Some(e.tau_ms),
            expected: e.display_value,
            actual: got.map(|g| g.0),
            tolerance: UTILITY_DISPLAY_TOLERANCE,
            passed: got.is_some_and(|g| within(e.display_value, g.0, UTILITY_DISPLAY_TOLERANCE)),
        });
        if let (true, Some(rank)) = (check_ranks, e.rank) {
            checks.push(CellCheck {
                kind: CheckKind::Rank,
                dataset_id: e.dataset_id.clone(),
                candidate: label,
                tau_ms: Some(e.tau_ms),
                expected: f64::from(rank),
                actual: got.map(|g| f64::from(g.1)),
                tolerance: 0.0,
                passed: got.is_some_and(|g| g.1 == rank),
            });
        }
    }

    Ok(VerificationReport { checks, warnings })
}

/// Runs [`verify`] over the bundled reference tables.
pub fn verify_bundled(precision: CostPrecision) -> Result<VerificationReport, Error> {
    use crate::fixtures;
    verify(
        &fixtures::paper_records(),
        &fixtures::paper_snapshot(),
        &fixtures::paper_expected_costs(),
        &fixtures::paper_expected_utilities(),
        precision,
    )
}
