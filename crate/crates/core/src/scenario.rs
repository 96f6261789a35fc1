//! What-if evaluation over an immutable record set: re-price, re-rank and
//! re-filter one dataset under a latency tolerance and optional price
//! overrides.
//!
//! The HTTP service is a thin layer over [`ScenarioEngine`]; anything it
//! returns can be reproduced by calling the engine directly.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{Analysis, CostPrecision};
use crate::costing::{
    apply_pricing_overrides, CostBasis, CostError, CostEstimate, PricingOverrides, PricingSnapshot,
};
use crate::decision::{
    pareto_frontier, rank_by_utility, utility_score, ObjectiveSpace, ParetoResult, UtilityScore,
};
use crate::measurements::{validate_consistency, MeasurementRecord, Paradigm, Warning};
use crate::stats::{aggregate_records, CellAggregate};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRequest {
    pub dataset_id: String,
    pub tau_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pricing_overrides: Option<PricingOverrides>,
    #[serde(default)]
    pub spaces: Vec<ObjectiveSpace>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResponse {
    pub dataset_id: String,
    pub tau_ms: f64,
    pub pricing_snapshot_date: NaiveDate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pricing_overrides: Option<PricingOverrides>,
    pub cost_precision: CostPrecision,
    /// Full-precision estimates; utilities use them at `cost_precision`.
    pub costs: Vec<CostEstimate>,
    /// Sorted by rank.
    pub utilities: Vec<UtilityScore>,
    pub frontiers: Vec<ParetoResult>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("malformed request at `{field}`: {message}")]
    MalformedRequest { field: String, message: String },
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("tau_ms must be a finite value > 0, got {0}")]
    InvalidTau(f64),
    #[error("invalid pricing override at `{field}`: {message}")]
    InvalidOverrides { field: String, message: String },
    #[error("{0}")]
    Computation(String),
}

impl ScenarioError {
    pub fn code(&self) -> &'static str {
        match self {
            ScenarioError::MalformedRequest { .. } => "malformed_request",
            ScenarioError::UnknownDataset(_) => "unknown_dataset",
            ScenarioError::InvalidTau(_) => "invalid_tau",
            ScenarioError::InvalidOverrides { .. } => "invalid_overrides",
            ScenarioError::Computation(_) => "computation_failed",
        }
    }

    /// JSON path of the offending request field, when there is one.
    pub fn field(&self) -> Option<String> {
        match self {
            ScenarioError::MalformedRequest { field, .. }
            | ScenarioError::InvalidOverrides { field, .. } => Some(field.clone()),
            ScenarioError::UnknownDataset(_) => Some("dataset_id".into()),
            ScenarioError::InvalidTau(_) => Some("tau_ms".into()),
            ScenarioError::Computation(_) => None,
        }
    }
}

/// One loaded model × dataset configuration with its base-price metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub dataset_id: String,
    pub model_id: String,
    pub paradigm: Paradigm,
    pub label: String,
    pub n_runs: usize,
    pub f1: f64,
    pub f1_std: f64,
    pub p50_latency_ms: f64,
    pub p95_latency_ms: f64,
    pub p99_latency_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ttft_p50_ms: Option<f64>,
    pub cost_basis: CostBasis,
    pub base_cost_usd_per_million: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Catalog {
    pub pricing_snapshot_date: NaiveDate,
    pub entries: Vec<CatalogEntry>,
    pub warnings: Vec<Warning>,
}

pub fn parse_scenario_request(body: &[u8]) -> Result<ScenarioRequest, ScenarioError> {
    let mut de = serde_json::Deserializer::from_slice(body);
    let request: ScenarioRequest = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::MalformedRequest {
            field: if path == "." { String::new() } else { path },
            message: e.inner().to_string(),
        }
    })?;
    de.end().map_err(|e| ScenarioError::MalformedRequest {
        field: String::new(),
        message: e.to_string(),
    })?;
    Ok(request)
}

/// Read-only scenario evaluator built once at startup.
#[derive(Debug, Clone)]
pub struct ScenarioEngine {
    aggregates: Vec<CellAggregate>,
    base: PricingSnapshot,
    warnings: Vec<Warning>,
    catalog: Catalog,
    precision: CostPrecision,
}

impl ScenarioEngine {
    pub fn new(
        records: &[MeasurementRecord],
        base: PricingSnapshot,
        precision: CostPrecision,
    ) -> Result<Self, Error> {
        let aggregates = aggregate_records(records)?;
        let warnings = validate_consistency(records);
        let analysis = Analysis::from_aggregates(&aggregates, &base, warnings.clone())?;
        let entries = analysis
            .cells
            .iter()
            .map(|cell| {
                let agg = &cell.aggregate;
                CatalogEntry {
                    dataset_id: agg.key.dataset_id.clone(),
                    model_id: agg.key.model_id.clone(),
                    paradigm: agg.key.paradigm,
                    label: agg.key.label(),
                    n_runs: agg.n_runs,
                    f1: agg.quality.f1_macro.mean,
                    f1_std: agg.quality.f1_macro.std,
                    p50_latency_ms: agg.latency.p50_ms,
                    p95_latency_ms: agg.latency.p95_ms,
                    p99_latency_ms: agg.latency.p99_ms,
                    ttft_p50_ms: agg.ttft.map(|t| t.p50_ms),
                    cost_basis: cell.cost.cost_basis,
                    base_cost_usd_per_million: cell.cost.usd_per_million_requests,
                }
            })
            .collect();
        let catalog = Catalog {
            pricing_snapshot_date: base.snapshot_date,
            entries,
            warnings: warnings.clone(),
        };
        Ok(Self {
            aggregates,
            base,
            warnings,
            catalog,
            precision,
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn base_snapshot(&self) -> &PricingSnapshot {
        &self.base
    }

    pub fn precision(&self) -> CostPrecision {
        self.precision
    }

    pub fn evaluate(&self, request: &ScenarioRequest) -> Result<ScenarioResponse, ScenarioError> {
        if !(request.tau_ms.is_finite() && request.tau_ms > 0.0) {
            return Err(ScenarioError::InvalidTau(request.tau_ms));
        }
        let cells: Vec<CellAggregate> = self
            .aggregates
            .iter()
            .filter(|a| a.key.dataset_id == request.dataset_id)
            .cloned()
            .collect();
        if cells.is_empty() {
            return Err(ScenarioError::UnknownDataset(request.dataset_id.clone()));
        }

        let snapshot = match &request.pricing_overrides {
            Some(o) => apply_pricing_overrides(&self.base, o).map_err(override_error)?,
            None => self.base.clone(),
        };
        let warnings: Vec<Warning> = self
            .warnings
            .iter()
            .filter(|w| w.dataset_id() == request.dataset_id)
            .cloned()
            .collect();
        let analysis = Analysis::from_aggregates(&cells, &snapshot, warnings)
            .map_err(|e| ScenarioError::Computation(e.to_string()))?;
        let candidates = analysis.candidates(&request.dataset_id, self.precision);

        let scores = candidates
            .iter()
            .map(|c| utility_score(c, request.tau_ms))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ScenarioError::Computation(e.to_string()))?;
        let mut utilities =
            rank_by_utility(scores).map_err(|e| ScenarioError::Computation(e.to_string()))?;
        utilities.sort_by_key(|s| s.rank);

        let mut spaces = request.spaces.clone();
        spaces.dedup();
        let frontiers = spaces
            .iter()
            .map(|&space| pareto_frontier(&candidates, space))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ScenarioError::Computation(e.to_string()))?;

        Ok(ScenarioResponse {
            dataset_id: request.dataset_id.clone(),
            tau_ms: request.tau_ms,
            pricing_snapshot_date: snapshot.snapshot_date,
            pricing_overrides: request.pricing_overrides.clone(),
            cost_precision: self.precision,
            costs: analysis.cells.into_iter().map(|c| c.cost).collect(),
            utilities,
            frontiers,
            warnings: analysis.warnings,
        })
    }
}

fn override_error(err: CostError) -> ScenarioError {
    match err {
        CostError::UnknownModel { model_id } => ScenarioError::InvalidOverrides {
            field: format!("pricing_overrides.token_prices.{model_id}"),
            message: format!("unknown model `{model_id}`"),
        },
        CostError::InvalidInput { field, value } => ScenarioError::InvalidOverrides {
            field: format!("pricing_overrides.{field}"),
            message: format!("price must be a finite value >= 0, got {value}"),
        },
        other => ScenarioError::InvalidOverrides {
            field: "pricing_overrides".into(),
            message: other.to_string(),
        },
    }
}
