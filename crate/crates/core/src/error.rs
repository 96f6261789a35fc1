use thiserror::Error;

use crate::costing::CostError;
use crate::decision::DecisionError;
use crate::measurements::RecordError;
use crate::stats::StatsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Records(#[from] RecordError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("{path}: {message}")]
    Fixture { path: String, message: String },
}
