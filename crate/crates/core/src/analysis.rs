//! Records → per-cell aggregates → cost estimates → selection candidates.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::costing::{estimate_cell_cost, CostEstimate, PricingSnapshot};
use crate::decision::{
    pareto_frontier, tau_sweep, Candidate, ObjectiveSpace, ParetoResult, TauSweep,
};
use crate::display::round2;
use crate::measurements::{validate_consistency, CellKey, MeasurementRecord, Warning};
use crate::stats::{aggregate_records, CellAggregate};
use crate::Error;

/// Resolution of the cost that enters utility and Pareto comparisons.
///
/// The published utility tables were computed from costs already rounded to
/// the cent, so `Cents` is the default. Cost estimates themselves are always
/// kept at full precision. A positive cost below half a cent is left
/// unrounded rather than collapsed to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostPrecision {
    #[default]
    Cents,
    Full,
}

impl CostPrecision {
    pub fn apply(self, usd: f64) -> f64 {
        match self {
            CostPrecision::Cents if round2(usd) > 0.0 => round2(usd),
            CostPrecision::Cents => usd,
            CostPrecision::Full => usd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub aggregate: CellAggregate,
    pub cost: CostEstimate,
}

impl CellSummary {
    pub fn key(&self) -> &CellKey {
        &self.aggregate.key
    }

    pub fn candidate(&self, precision: CostPrecision) -> Candidate {
        let key = &self.aggregate.key;
        Candidate {
            dataset_id: key.dataset_id.clone(),
            model_id: key.model_id.clone(),
            paradigm: key.paradigm,
            f1: self.aggregate.quality.f1_macro.mean,
            cost_usd_per_million: precision.apply(self.cost.usd_per_million_requests),
            p50_latency_ms: self.aggregate.latency.p50_ms,
        }
    }
}

/// A costed record set under one pricing snapshot. Cells are sorted by
/// dataset, then model, then paradigm.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub pricing_snapshot_date: NaiveDate,
    pub cells: Vec<CellSummary>,
    pub warnings: Vec<Warning>,
}

impl Analysis {
    pub fn new(records: &[MeasurementRecord], snapshot: &PricingSnapshot) -> Result<Self, Error> {
        let aggregates = aggregate_records(records)?;
        Self::from_aggregates(&aggregates, snapshot, validate_consistency(records))
    }

    /// Re-prices already aggregated cells, e.g. under a what-if snapshot.
    pub fn from_aggregates(
        aggregates: &[CellAggregate],
        snapshot: &PricingSnapshot,
        warnings: Vec<Warning>,
    ) -> Result<Self, Error> {
        let cells = aggregates
            .iter()
            .map(|agg| {
                Ok(CellSummary {
                    cost: estimate_cell_cost(agg, snapshot)?,
                    aggregate: agg.clone(),
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        Ok(Self {
            pricing_snapshot_date: snapshot.snapshot_date,
            cells,
            warnings,
        })
    }

    pub fn datasets(&self) -> Vec<String> {
        self.cells
            .iter()
            .map(|c| c.key().dataset_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn has_dataset(&self, dataset_id: &str) -> bool {
        self.cells.iter().any(|c| c.key().dataset_id == dataset_id)
    }

    pub fn cells_for<'a>(
        &'a self,
        dataset_id: &'a str,
    ) -> impl Iterator<Item = &'a CellSummary> + 'a {
        self.cells
            .iter()
            .filter(move |c| c.key().dataset_id == dataset_id)
    }

    pub fn candidates(&self, dataset_id: &str, precision: CostPrecision) -> Vec<Candidate> {
        self.cells_for(dataset_id)
            .map(|c| c.candidate(precision))
            .collect()
    }

    fn require(&self, dataset_id: &str) -> Result<Vec<Candidate>, Error> {
        if !self.has_dataset(dataset_id) {
            return Err(Error::UnknownDataset(dataset_id.to_string()));
        }
        Ok(self.candidates(dataset_id, CostPrecision::Cents))
    }

    pub fn tau_sweep(
        &self,
        dataset_id: &str,
        taus_ms: &[f64],
        precision: CostPrecision,
    ) -> Result<TauSweep, Error> {
        self.require(dataset_id)?;
        Ok(tau_sweep(&self.candidates(dataset_id, precision), taus_ms)?)
    }

    pub fn pareto(
        &self,
        dataset_id: &str,
        space: ObjectiveSpace,
        precision: CostPrecision,
    ) -> Result<ParetoResult, Error> {
        self.require(dataset_id)?;
        Ok(pareto_frontier(
            &self.candidates(dataset_id, precision),
            space,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn paper_fixtures_aggregate_to_published_means() {
        let analysis =
            Analysis::new(&fixtures::paper_records(), &fixtures::paper_snapshot()).unwrap();
        assert_eq!(analysis.cells.len(), 28);
        assert!(analysis.warnings.is_empty(), "{:?}", analysis.warnings);
        let distil = analysis
            .cells_for("imdb")
            .find(|c| c.key().model_id == "distilbert")
            .unwrap();
        assert!((distil.aggregate.quality.f1_macro.mean - 0.9273).abs() < 1e-12);
        assert!((distil.aggregate.quality.f1_macro.std - 0.0008).abs() < 1e-12);
        assert_eq!(distil.aggregate.n_runs, 3);
        assert_eq!(distil.aggregate.latency.p50_ms, 234.82);
        // 0.23482 s * 53 USD per million seconds
        assert!((distil.cost.usd_per_million_requests - 12.44546).abs() < 1e-9);
        assert_eq!(
            distil.candidate(CostPrecision::Cents).cost_usd_per_million,
            12.45
        );
    }

    #[test]
    fn sub_cent_costs_are_not_zeroed() {
        assert_eq!(CostPrecision::Cents.apply(0.004), 0.004);
        assert_eq!(CostPrecision::Cents.apply(0.005), 0.01);
        assert_eq!(CostPrecision::Full.apply(0.004), 0.004);
    }

    #[test]
    fn unknown_dataset_is_an_error() {
        let analysis =
            Analysis::new(&fixtures::paper_records(), &fixtures::paper_snapshot()).unwrap();
        assert!(matches!(
            analysis.tau_sweep("yelp", &[500.0], CostPrecision::Cents),
            Err(Error::UnknownDataset(_))
        ));
    }
}
