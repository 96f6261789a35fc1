//! Inference cost per million requests under a dated pricing snapshot.
//!
//! Two models:
//!
//! * serverless compute (fine-tuned encoders): billed time is the p50
//!   latency, charged per vCPU-second and GiB-second;
//! * token usage (prompted API models): average input and output tokens per
//!   request times the per-million-token prices.
//!
//! Both return USD per 1M requests at full precision.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measurements::{CellKey, ResourceAllocation, TokenUsage};
use crate::stats::CellAggregate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("`{field}` must be a finite value >= 0, got {value}")]
    InvalidInput { field: String, value: f64 },
    #[error("no token price for model `{model_id}` in the pricing snapshot")]
    MissingTokenPrice { model_id: String },
    #[error("{cell}: {what} missing, cannot estimate cost")]
    MissingUsage { cell: String, what: &'static str },
    #[error("override references unknown model `{model_id}`")]
    UnknownModel { model_id: String },
    #[error("pricing snapshot: {message} (at `{field}`)")]
    Parse { field: String, message: String },
    #[error("pricing snapshot: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenPrice {
    pub input_usd_per_million_tokens: f64,
    pub output_usd_per_million_tokens: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServingPrices {
    pub vcpu_usd_per_million_vcpu_seconds: f64,
    pub gib_usd_per_million_gib_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingSnapshot {
    pub snapshot_date: NaiveDate,
    pub token_prices: BTreeMap<String, TokenPrice>,
    pub serving_prices: ServingPrices,
}

fn check_price(field: String, value: f64) -> Result<(), CostError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(CostError::InvalidInput { field, value })
    }
}

impl PricingSnapshot {
    pub fn validate(&self) -> Result<(), CostError> {
        for (model, price) in &self.token_prices {
            check_price(
                format!("token_prices.{model}.input_usd_per_million_tokens"),
                price.input_usd_per_million_tokens,
            )?;
            check_price(
                format!("token_prices.{model}.output_usd_per_million_tokens"),
                price.output_usd_per_million_tokens,
            )?;
        }
        check_price(
            "serving_prices.vcpu_usd_per_million_vcpu_seconds".into(),
            self.serving_prices.vcpu_usd_per_million_vcpu_seconds,
        )?;
        check_price(
            "serving_prices.gib_usd_per_million_gib_seconds".into(),
            self.serving_prices.gib_usd_per_million_gib_seconds,
        )
    }

    pub fn from_json_str(json: &str) -> Result<Self, CostError> {
        let mut de = serde_json::Deserializer::from_str(json);
        let snapshot: PricingSnapshot =
            serde_path_to_error::deserialize(&mut de).map_err(|err| CostError::Parse {
                field: err.path().to_string(),
                message: err.inner().to_string(),
            })?;
        de.end().map_err(|e| CostError::Parse {
            field: ".".into(),
            message: e.to_string(),
        })?;
        snapshot.validate()?;
        Ok(snapshot)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, CostError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CostError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn token_price(&self, model_id: &str) -> Result<&TokenPrice, CostError> {
        self.token_prices
            .get(model_id)
            .ok_or_else(|| CostError::MissingTokenPrice {
                model_id: model_id.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostBasis {
    ServerlessCompute,
    TokenUsage,
}

impl CostBasis {
    pub fn as_str(self) -> &'static str {
        match self {
            CostBasis::ServerlessCompute => "serverless_compute",
            CostBasis::TokenUsage => "token_usage",
        }
    }
}

/// The figures a cost estimate was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CostInputs {
    ServerlessCompute {
        p50_latency_ms: f64,
        resources: ResourceAllocation,
        prices: ServingPrices,
    },
    TokenUsage {
        tokens: TokenUsage,
        prices: TokenPrice,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostEstimate {
    pub dataset_id: String,
    pub model_id: String,
    pub paradigm: crate::measurements::Paradigm,
    pub usd_per_million_requests: f64,
    pub cost_basis: CostBasis,
    pub inputs_used: CostInputs,
}

impl CostEstimate {
    pub fn key(&self) -> CellKey {
        CellKey::new(&self.dataset_id, &self.model_id, self.paradigm)
    }
}

/// `p50 (s) × (vCPU × P_vCPU + GiB × P_GiB)`.
///
/// Prices are per million resource-seconds and the result is per million
/// requests, so the two 10⁶ factors cancel.
pub fn encoder_cost_per_million(
    key: &CellKey,
    p50_latency_ms: f64,
    resources: &ResourceAllocation,
    prices: &ServingPrices,
) -> Result<CostEstimate, CostError> {
    check_price("p50_latency_ms".into(), p50_latency_ms)?;
    check_price("vcpu".into(), resources.vcpu)?;
    check_price("memory_gib".into(), resources.memory_gib)?;
    check_price(
        "vcpu_usd_per_million_vcpu_seconds".into(),
        prices.vcpu_usd_per_million_vcpu_seconds,
    )?;
    check_price(
        "gib_usd_per_million_gib_seconds".into(),
        prices.gib_usd_per_million_gib_seconds,
    )?;

    let per_second = resources.vcpu * prices.vcpu_usd_per_million_vcpu_seconds
        + resources.memory_gib * prices.gib_usd_per_million_gib_seconds;
    Ok(CostEstimate {
        dataset_id: key.dataset_id.clone(),
        model_id: key.model_id.clone(),
        paradigm: key.paradigm,
        usd_per_million_requests: p50_latency_ms / 1000.0 * per_second,
        cost_basis: CostBasis::ServerlessCompute,
        inputs_used: CostInputs::ServerlessCompute {
            p50_latency_ms,
            resources: *resources,
            prices: *prices,
        },
    })
}

/// `tokens_in × P_in + tokens_out × P_out` with prices per million tokens.
pub fn llm_cost_per_million(
    key: &CellKey,
    tokens: &TokenUsage,
    prices: &TokenPrice,
) -> Result<CostEstimate, CostError> {
    check_price(
        "avg_input_tokens_per_request".into(),
        tokens.avg_input_tokens_per_request,
    )?;
    check_price(
        "avg_output_tokens_per_request".into(),
        tokens.avg_output_tokens_per_request,
    )?;
    check_price(
        "input_usd_per_million_tokens".into(),
        prices.input_usd_per_million_tokens,
    )?;
    check_price(
        "output_usd_per_million_tokens".into(),
        prices.output_usd_per_million_tokens,
    )?;

    Ok(CostEstimate {
        dataset_id: key.dataset_id.clone(),
        model_id: key.model_id.clone(),
        paradigm: key.paradigm,
        usd_per_million_requests: tokens.avg_input_tokens_per_request
            * prices.input_usd_per_million_tokens
            + tokens.avg_output_tokens_per_request * prices.output_usd_per_million_tokens,
        cost_basis: CostBasis::TokenUsage,
        inputs_used: CostInputs::TokenUsage {
            tokens: *tokens,
            prices: *prices,
        },
    })
}

/// Picks the cost model from the cell's paradigm.
///
/// Encoders are priced on the aggregated p50 latency. TTFT never enters cost.
pub fn estimate_cell_cost(
    cell: &CellAggregate,
    snapshot: &PricingSnapshot,
) -> Result<CostEstimate, CostError> {
    let key = &cell.key;
    if key.paradigm.is_prompted() {
        let tokens = cell
            .tokens
            .as_ref()
            .ok_or_else(|| CostError::MissingUsage {
                cell: key.to_string(),
                what: "token usage",
            })?;
        llm_cost_per_million(key, tokens, snapshot.token_price(&key.model_id)?)
    } else {
        let resources = cell
            .resources
            .as_ref()
            .ok_or_else(|| CostError::MissingUsage {
                cell: key.to_string(),
                what: "resource allocation",
            })?;
        encoder_cost_per_million(
            key,
            cell.latency.p50_ms,
            resources,
            &snapshot.serving_prices,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenPriceOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_usd_per_million_tokens: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_usd_per_million_tokens: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServingPricesOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vcpu_usd_per_million_vcpu_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gib_usd_per_million_gib_seconds: Option<f64>,
}

/// A partial [`PricingSnapshot`]: every field present replaces the base value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub token_prices: BTreeMap<String, TokenPriceOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serving_prices: Option<ServingPricesOverride>,
}

impl PricingOverrides {
    pub fn is_empty(&self) -> bool {
        self.snapshot_date.is_none()
            && self.token_prices.is_empty()
            && self.serving_prices.is_none()
    }
}

pub fn apply_pricing_overrides(
    base: &PricingSnapshot,
    overrides: &PricingOverrides,
) -> Result<PricingSnapshot, CostError> {
    let mut out = base.clone();
    if let Some(date) = overrides.snapshot_date {
        out.snapshot_date = date;
    }
    for (model_id, o) in &overrides.token_prices {
        let price = out
            .token_prices
            .get_mut(model_id)
            .ok_or_else(|| CostError::UnknownModel {
                model_id: model_id.clone(),
            })?;
        if let Some(v) = o.input_usd_per_million_tokens {
            price.input_usd_per_million_tokens = v;
        }
        if let Some(v) = o.output_usd_per_million_tokens {
            price.output_usd_per_million_tokens = v;
        }
    }
    if let Some(s) = &overrides.serving_prices {
        if let Some(v) = s.vcpu_usd_per_million_vcpu_seconds {
            out.serving_prices.vcpu_usd_per_million_vcpu_seconds = v;
        }
        if let Some(v) = s.gib_usd_per_million_gib_seconds {
            out.serving_prices.gib_usd_per_million_gib_seconds = v;
        }
    }
    out.validate()?;
    Ok(out)
}
