//! Reference data compiled into the binary: the published measurement tables
//! as records, the pricing snapshot they were costed with, and the published
//! cost and utility tables used as golden values.

use crate::costing::PricingSnapshot;
use crate::measurements::{parse_records_str, MeasurementRecord};
use crate::verify::{
    parse_expected_costs, parse_expected_utilities, ExpectedCost, ExpectedUtility,
};

pub const PAPER_RECORDS: &str = include_str!("../../../fixtures/paper_records.jsonl");
pub const PAPER_SNAPSHOT: &str = include_str!("../../../pricing/paper_snapshot.json");
pub const PAPER_EXPECTED_COSTS: &str = include_str!("../../../fixtures/paper_expected_costs.jsonl");
pub const PAPER_EXPECTED_UTILITY: &str =
    include_str!("../../../fixtures/paper_expected_utility.jsonl");

pub const PAPER_DATASETS: [&str; 4] = ["agnews", "dbpedia", "imdb", "sst2"];

pub fn paper_records() -> Vec<MeasurementRecord> {
    parse_records_str(PAPER_RECORDS).expect("bundled records are valid")
}

pub fn paper_snapshot() -> PricingSnapshot {
    PricingSnapshot::from_json_str(PAPER_SNAPSHOT).expect("bundled snapshot is valid")
}

pub fn paper_expected_costs() -> Vec<ExpectedCost> {
    parse_expected_costs(PAPER_EXPECTED_COSTS).expect("bundled expected costs are valid")
}

pub fn paper_expected_utilities() -> Vec<ExpectedUtility> {
    parse_expected_utilities(PAPER_EXPECTED_UTILITY).expect("bundled expected utilities are valid")
}
