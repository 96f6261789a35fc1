//! Cost-aware model selection over benchmark measurements.
//!
//! The pipeline runs in one direction:
//!
//! 1. [`measurements`] parses and validates per-run benchmark records.
//! 2. [`stats`] trims warm-up samples, computes latency percentiles and
//!    aggregates runs (median of per-run percentiles, mean ± std of quality).
//! 3. [`costing`] prices each model under a dated [`PricingSnapshot`], either
//!    from serverless compute time or from token usage.
//! 4. [`decision`] scores candidates with the exponential-latency utility,
//!    ranks them per latency tolerance and filters Pareto-dominated ones.
//!
//! [`analysis`] wires the steps together, [`report`] renders results,
//! [`verify`] checks them against the bundled reference tables and
//! [`scenario`] answers what-if queries for the HTTP service.

pub mod analysis;
pub mod costing;
pub mod decision;
pub mod display;
mod error;
pub mod fixtures;
pub mod measurements;
pub mod plot;
pub mod report;
pub mod scenario;
pub mod stats;
pub mod verify;

pub use analysis::{Analysis, CellSummary, CostPrecision};
pub use costing::{CostBasis, CostEstimate, PricingOverrides, PricingSnapshot};
pub use decision::{Candidate, EpochRecord, ObjectiveSpace, ParetoResult, UtilityScore};
pub use error::Error;
pub use measurements::{CellKey, MeasurementRecord, Paradigm, Warning};
pub use scenario::{ScenarioEngine, ScenarioRequest, ScenarioResponse};
pub use stats::RunSummary;
