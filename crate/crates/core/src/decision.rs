//! Model selection: utility scoring and ranking, Pareto filtering, and
//! gap-penalized checkpoint selection.
//!
//! Utility is `U = (F1 / cost) · exp(−p50 / τ)` with F1 as a fraction, cost in
//! USD per 1M requests and τ the latency tolerance in milliseconds. Ranking
//! always uses the full-precision value; `display_value` (100·U, two
//! decimals) exists only for presentation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::display::round2;
use crate::measurements::{candidate_label, CellKey, Paradigm};

/// Latency tolerances swept by default: interactive, default, batch.
pub const DEFAULT_TAUS_MS: [f64; 3] = [250.0, 500.0, 1000.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecisionError {
    #[error("{candidate}: cost must be > 0 to score utility, got {cost}")]
    NonPositiveCost { candidate: String, cost: f64 },
    #[error("latency tolerance must be > 0, got {0}")]
    NonPositiveTau(f64),
    #[error("{candidate}: f1 must be a fraction in [0, 1], got {f1}")]
    F1OutOfRange { candidate: String, f1: f64 },
    #[error("{candidate}: `{field}` must be finite and >= 0, got {value}")]
    InvalidObjective {
        candidate: String,
        field: &'static str,
        value: f64,
    },
    #[error("candidates span several datasets (`{first}` and `{other}`)")]
    MixedDatasets { first: String, other: String },
    #[error("scores mix latency tolerances {first} and {other}")]
    MixedTau { first: f64, other: f64 },
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("unknown objective space `{0}`, expected one of f1_latency_cost_3d, f1_vs_cost, cost_vs_latency, f1_vs_latency")]
    UnknownSpace(String),
}

/// One model configuration on one dataset, reduced to the three objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub dataset_id: String,
    pub model_id: String,
    pub paradigm: Paradigm,
    pub f1: f64,
    pub cost_usd_per_million: f64,
    pub p50_latency_ms: f64,
}

impl Candidate {
    pub fn label(&self) -> String {
        candidate_label(&self.model_id, self.paradigm)
    }

    pub fn key(&self) -> CellKey {
        CellKey::new(&self.dataset_id, &self.model_id, self.paradigm)
    }

    fn check_objectives(&self) -> Result<(), DecisionError> {
        if !(self.f1.is_finite() && (0.0..=1.0).contains(&self.f1)) {
            return Err(DecisionError::F1OutOfRange {
                candidate: self.label(),
                f1: self.f1,
            });
        }
        for (field, value) in [
            ("cost_usd_per_million", self.cost_usd_per_million),
            ("p50_latency_ms", self.p50_latency_ms),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(DecisionError::InvalidObjective {
                    candidate: self.label(),
                    field,
                    value,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityScore {
    pub candidate: Candidate,
    pub tau_ms: f64,
    pub utility: f64,
    /// 100·U rounded half away from zero to two decimals.
    pub display_value: f64,
    /// 1-based rank within the (dataset, τ) group; `None` until ranked.
    pub rank: Option<u32>,
}

pub fn utility_score(candidate: &Candidate, tau_ms: f64) -> Result<UtilityScore, DecisionError> {
    if !(tau_ms.is_finite() && tau_ms > 0.0) {
        return Err(DecisionError::NonPositiveTau(tau_ms));
    }
    candidate.check_objectives()?;
    if candidate.cost_usd_per_million <= 0.0 {
        return Err(DecisionError::NonPositiveCost {
            candidate: candidate.label(),
            cost: candidate.cost_usd_per_million,
        });
    }
    let utility =
        candidate.f1 / candidate.cost_usd_per_million * (-candidate.p50_latency_ms / tau_ms).exp();
    Ok(UtilityScore {
        candidate: candidate.clone(),
        tau_ms,
        utility,
        display_value: round2(100.0 * utility),
        rank: None,
    })
}

/// Higher utility first; exact ties go to the cheaper, then the faster
/// candidate, then the lexicographically smaller label.
fn rank_order(a: &UtilityScore, b: &UtilityScore) -> Ordering {
    b.utility
        .total_cmp(&a.utility)
        .then_with(|| {
            a.candidate
                .cost_usd_per_million
                .total_cmp(&b.candidate.cost_usd_per_million)
        })
        .then_with(|| {
            a.candidate
                .p50_latency_ms
                .total_cmp(&b.candidate.p50_latency_ms)
        })
        .then_with(|| a.candidate.label().cmp(&b.candidate.label()))
}

/// Assigns ranks 1..n in place of any previous ranks; order of the list is kept.
pub fn rank_by_utility(mut scores: Vec<UtilityScore>) -> Result<Vec<UtilityScore>, DecisionError> {
    let first = scores
        .first()
        .ok_or(DecisionError::Empty("rank_by_utility"))?;
    let (dataset, tau) = (first.candidate.dataset_id.clone(), first.tau_ms);
    for s in &scores {
        if s.candidate.dataset_id != dataset {
            return Err(DecisionError::MixedDatasets {
                first: dataset,
                other: s.candidate.dataset_id.clone(),
            });
        }
        if s.tau_ms != tau {
            return Err(DecisionError::MixedTau {
                first: tau,
                other: s.tau_ms,
            });
        }
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| rank_order(&scores[i], &scores[j]));
    for (position, idx) in order.into_iter().enumerate() {
        scores[idx].rank = Some(position as u32 + 1);
    }
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauColumn {
    pub tau_ms: f64,
    /// Candidates in input order, each carrying its rank.
    pub scores: Vec<UtilityScore>,
}

impl TauColumn {
    pub fn by_rank(&self) -> Vec<&UtilityScore> {
        let mut out: Vec<&UtilityScore> = self.scores.iter().collect();
        out.sort_by_key(|s| s.rank);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauSweep {
    pub dataset_id: String,
    pub columns: Vec<TauColumn>,
}

/// Scores and ranks every candidate of one dataset at each τ.
pub fn tau_sweep(candidates: &[Candidate], taus_ms: &[f64]) -> Result<TauSweep, DecisionError> {
    let first = candidates
        .first()
        .ok_or(DecisionError::Empty("tau_sweep candidates"))?;
    if taus_ms.is_empty() {
        return Err(DecisionError::Empty("tau_sweep taus"));
    }
    if let Some(other) = candidates.iter().find(|c| c.dataset_id != first.dataset_id) {
        return Err(DecisionError::MixedDatasets {
            first: first.dataset_id.clone(),
            other: other.dataset_id.clone(),
        });
    }
    let columns = taus_ms
        .iter()
        .map(|&tau| {
            let scores = candidates
                .iter()
                .map(|c| utility_score(c, tau))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(TauColumn {
                tau_ms: tau,
                scores: rank_by_utility(scores)?,
            })
        })
        .collect::<Result<Vec<_>, DecisionError>>()?;
    Ok(TauSweep {
        dataset_id: first.dataset_id.clone(),
        columns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    F1,
    Latency,
    Cost,
}

impl Objective {
    /// Objective value oriented so that larger is always better.
    fn gain(self, c: &Candidate) -> f64 {
        match self {
            Objective::F1 => c.f1,
            Objective::Latency => -c.p50_latency_ms,
            Objective::Cost => -c.cost_usd_per_million,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSpace {
    #[serde(rename = "f1_latency_cost_3d")]
    F1LatencyCost3d,
    F1VsCost,
    CostVsLatency,
    F1VsLatency,
}

impl ObjectiveSpace {
    pub const ALL: [ObjectiveSpace; 4] = [
        ObjectiveSpace::F1LatencyCost3d,
        ObjectiveSpace::F1VsCost,
        ObjectiveSpace::CostVsLatency,
        ObjectiveSpace::F1VsLatency,
    ];

    pub fn objectives(self) -> &'static [Objective] {
        match self {
            ObjectiveSpace::F1LatencyCost3d => {
                &[Objective::F1, Objective::Latency, Objective::Cost]
            }
            ObjectiveSpace::F1VsCost => &[Objective::F1, Objective::Cost],
            ObjectiveSpace::CostVsLatency => &[Objective::Cost, Objective::Latency],
            ObjectiveSpace::F1VsLatency => &[Objective::F1, Objective::Latency],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveSpace::F1LatencyCost3d => "f1_latency_cost_3d",
            ObjectiveSpace::F1VsCost => "f1_vs_cost",
            ObjectiveSpace::CostVsLatency => "cost_vs_latency",
            ObjectiveSpace::F1VsLatency => "f1_vs_latency",
        }
    }
}

impl fmt::Display for ObjectiveSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectiveSpace {
    type Err = DecisionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectiveSpace::ALL
            .into_iter()
            .find(|space| space.as_str() == s)
            .ok_or_else(|| DecisionError::UnknownSpace(s.to_string()))
    }
}

/// True when `a` is no worse than `b` on every objective of `space` and
/// strictly better on at least one.
pub fn dominates(a: &Candidate, b: &Candidate, space: ObjectiveSpace) -> bool {
    let mut strictly_better = false;
    for objective in space.objectives() {
        let (ga, gb) = (objective.gain(a), objective.gain(b));
        if ga < gb {
            return false;
        }
        if ga > gb {
            strictly_better = true;
        }
    }
    strictly_better
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominatedCandidate {
    pub candidate: Candidate,
    /// A frontier member that dominates `candidate`.
    pub dominated_by: Candidate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoResult {
    pub objective_space: ObjectiveSpace,
    /// Non-dominated candidates, in input order.
    pub frontier: Vec<Candidate>,
    /// Dominated candidates with one witness each, in input order.
    pub dominated: Vec<DominatedCandidate>,
}

impl ParetoResult {
    pub fn is_on_frontier(&self, label: &str) -> bool {
        self.frontier.iter().any(|c| c.label() == label)
    }

    pub fn witness_for(&self, label: &str) -> Option<&Candidate> {
        self.dominated
            .iter()
            .find(|d| d.candidate.label() == label)
            .map(|d| &d.dominated_by)
    }
}

/// Non-dominated subset of `candidates` in `space`.
///
/// Candidates are pre-sorted lexicographically on their oriented objectives,
/// best first. In that order a dominator always precedes what it dominates,
/// so each candidate is compared only against the frontier built so far.
pub fn pareto_frontier(
    candidates: &[Candidate],
    space: ObjectiveSpace,
) -> Result<ParetoResult, DecisionError> {
    if candidates.is_empty() {
        return Err(DecisionError::Empty("pareto_frontier"));
    }
    for c in candidates {
        if ![c.f1, c.cost_usd_per_million, c.p50_latency_ms]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(DecisionError::InvalidObjective {
                candidate: c.label(),
                field: "objectives",
                value: f64::NAN,
            });
        }
    }

    let objectives = space.objectives();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| {
        objectives
            .iter()
            .map(|o| o.gain(&candidates[j]).total_cmp(&o.gain(&candidates[i])))
            .find(|ord| ord.is_ne())
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });

    let mut window: Vec<usize> = Vec::new();
    let mut witness: Vec<Option<usize>> = vec![None; candidates.len()];
    for idx in order {
        match window
            .iter()
            .copied()
            .find(|&w| dominates(&candidates[w], &candidates[idx], space))
        {
            Some(w) => witness[idx] = Some(w),
            None => window.push(idx),
        }
    }

    let mut frontier = Vec::new();
    let mut dominated = Vec::new();
    for (idx, c) in candidates.iter().enumerate() {
        match witness[idx] {
            None => frontier.push(c.clone()),
            Some(w) => dominated.push(DominatedCandidate {
                candidate: c.clone(),
                dominated_by: candidates[w].clone(),
            }),
        }
    }
    Ok(ParetoResult {
        objective_space: space,
        frontier,
        dominated,
    })
}

/// Train and validation F1 of one fine-tuning checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch_index: u32,
    pub f1_train: f64,
    pub f1_val: f64,
}

/// `F1_val − |F1_val − F1_train|`: validation F1 minus the train/val gap,
/// penalizing overfit and underfit alike.
pub fn gap_penalized_score(epoch: &EpochRecord) -> f64 {
    epoch.f1_val - (epoch.f1_val - epoch.f1_train).abs()
}

/// Highest gap-penalized score; equal scores go to the earlier epoch.
pub fn select_best_epoch(epochs: &[EpochRecord]) -> Result<&EpochRecord, DecisionError> {
    epochs
        .iter()
        .reduce(|best, e| {
            let (sb, se) = (gap_penalized_score(best), gap_penalized_score(e));
            if se > sb || (se == sb && e.epoch_index < best.epoch_index) {
                e
            } else {
                best
            }
        })
        .ok_or(DecisionError::Empty("select_best_epoch"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(label: &str, paradigm: Paradigm, f1: f64, cost: f64, latency: f64) -> Candidate {
        Candidate {
            dataset_id: "d".into(),
            model_id: label.into(),
            paradigm,
            f1,
            cost_usd_per_million: cost,
            p50_latency_ms: latency,
        }
    }

    fn ft(label: &str, f1: f64, cost: f64, latency: f64) -> Candidate {
        cand(label, Paradigm::FineTuned, f1, cost, latency)
    }

    #[test]
    fn distilbert_imdb_tau_500() {
        let s = utility_score(&ft("distilbert", 0.9273, 12.44, 234.82), 500.0).unwrap();
        assert_eq!(s.display_value, 4.66);
        assert_eq!(s.rank, None);
    }

    #[test]
    fn gpt4o_zero_shot_sst2_tau_250() {
        let c = cand("gpt-4o", Paradigm::ZeroShot, 0.87, 192.48, 377.10);
        assert_eq!(utility_score(&c, 250.0).unwrap().display_value, 0.10);
    }

    #[test]
    fn zero_latency_utility_is_f1_over_cost() {
        let c = ft("m", 0.8, 4.0, 0.0);
        assert_eq!(utility_score(&c, 123.0).unwrap().utility, 0.8 / 4.0);
    }

    #[test]
    fn utility_guards() {
        assert!(matches!(
            utility_score(&ft("m", 0.8, 0.0, 1.0), 500.0),
            Err(DecisionError::NonPositiveCost { .. })
        ));
        assert!(matches!(
            utility_score(&ft("m", 0.8, 1.0, 1.0), 0.0),
            Err(DecisionError::NonPositiveTau(_))
        ));
        assert!(matches!(
            utility_score(&ft("m", 80.0, 1.0, 1.0), 500.0),
            Err(DecisionError::F1OutOfRange { .. })
        ));
    }

    fn with_utility(label: &str, utility: f64, cost: f64) -> UtilityScore {
        UtilityScore {
            candidate: ft(label, 0.5, cost, 100.0),
            tau_ms: 500.0,
            utility,
            display_value: round2(100.0 * utility),
            rank: None,
        }
    }

    #[test]
    fn ranks_descend_by_utility() {
        let ranked = rank_by_utility(vec![
            with_utility("a", 0.5, 1.0),
            with_utility("b", 0.3, 1.0),
            with_utility("c", 0.9, 1.0),
        ])
        .unwrap();
        let ranks: Vec<_> = ranked.iter().map(|s| s.rank.unwrap()).collect();
        assert_eq!(ranks, vec![2, 3, 1]);
    }

    #[test]
    fn exact_tie_prefers_cheaper() {
        let ranked = rank_by_utility(vec![
            with_utility("a", 0.5, 10.0),
            with_utility("b", 0.5, 5.0),
        ])
        .unwrap();
        assert_eq!(ranked[0].rank, Some(2));
        assert_eq!(ranked[1].rank, Some(1));
    }

    #[test]
    fn tie_chain_falls_back_to_latency_then_label() {
        let mut a = with_utility("zeta", 0.5, 5.0);
        let mut b = with_utility("alpha", 0.5, 5.0);
        a.candidate.p50_latency_ms = 50.0;
        let ranked = rank_by_utility(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(ranked[0].rank, Some(1));
        b.candidate.p50_latency_ms = 50.0;
        let ranked = rank_by_utility(vec![a, b]).unwrap();
        assert_eq!(ranked[1].rank, Some(1));
    }

    #[test]
    fn ranking_rejects_mixed_groups() {
        let mut other = with_utility("b", 0.1, 1.0);
        other.tau_ms = 250.0;
        assert!(matches!(
            rank_by_utility(vec![with_utility("a", 0.2, 1.0), other]),
            Err(DecisionError::MixedTau { .. })
        ));
        assert!(rank_by_utility(vec![]).is_err());
    }

    #[test]
    fn singleton_sweep_ranks_first() {
        let sweep = tau_sweep(&[ft("m", 0.9, 3.0, 100.0)], &DEFAULT_TAUS_MS).unwrap();
        assert_eq!(sweep.columns.len(), 3);
        assert!(sweep.columns.iter().all(|c| c.scores[0].rank == Some(1)));
    }

    #[test]
    fn sweep_rejects_mixed_datasets_and_empty() {
        let mut other = ft("b", 0.9, 3.0, 100.0);
        other.dataset_id = "e".into();
        assert!(matches!(
            tau_sweep(&[ft("a", 0.9, 3.0, 100.0), other], &[500.0]),
            Err(DecisionError::MixedDatasets { .. })
        ));
        assert!(tau_sweep(&[], &[500.0]).is_err());
        assert!(tau_sweep(&[ft("a", 0.9, 3.0, 100.0)], &[]).is_err());
    }

    #[test]
    fn pareto_singleton() {
        let r =
            pareto_frontier(&[ft("m", 0.9, 3.0, 100.0)], ObjectiveSpace::F1LatencyCost3d).unwrap();
        assert_eq!(r.frontier.len(), 1);
        assert!(r.dominated.is_empty());
        assert!(pareto_frontier(&[], ObjectiveSpace::F1VsCost).is_err());
    }

    #[test]
    fn duplicates_stay_co_frontier() {
        let a = ft("a", 0.9, 3.0, 100.0);
        let b = ft("b", 0.9, 3.0, 100.0);
        let r = pareto_frontier(&[a, b], ObjectiveSpace::F1LatencyCost3d).unwrap();
        assert_eq!(r.frontier.len(), 2);
    }

    #[test]
    fn projection_changes_membership() {
        // fast but expensive vs slow but cheap, same f1
        let fast = ft("fast", 0.9, 10.0, 50.0);
        let cheap = ft("cheap", 0.9, 5.0, 500.0);
        let both = [fast, cheap];
        let f1_cost = pareto_frontier(&both, ObjectiveSpace::F1VsCost).unwrap();
        assert_eq!(f1_cost.frontier.len(), 1);
        assert_eq!(f1_cost.witness_for("fast").unwrap().label(), "cheap");
        let f1_lat = pareto_frontier(&both, ObjectiveSpace::F1VsLatency).unwrap();
        assert_eq!(f1_lat.witness_for("cheap").unwrap().label(), "fast");
        let all = pareto_frontier(&both, ObjectiveSpace::F1LatencyCost3d).unwrap();
        assert_eq!(all.frontier.len(), 2);
    }

    #[test]
    fn space_names_round_trip() {
        for space in ObjectiveSpace::ALL {
            assert_eq!(space.as_str().parse::<ObjectiveSpace>().unwrap(), space);
            assert_eq!(
                serde_json::to_string(&space).unwrap(),
                format!("\"{}\"", space.as_str())
            );
        }
        assert!("f1_vs_price".parse::<ObjectiveSpace>().is_err());
    }

    fn epoch(i: u32, train: f64, val: f64) -> EpochRecord {
        EpochRecord {
            epoch_index: i,
            f1_train: train,
            f1_val: val,
        }
    }

    #[test]
    fn gap_score_examples() {
        assert_eq!(gap_penalized_score(&epoch(1, 0.95, 0.95)), 0.95);
        assert!((gap_penalized_score(&epoch(1, 0.99, 0.93)) - 0.87).abs() < 1e-12);
        assert!((gap_penalized_score(&epoch(1, 0.90, 0.93)) - 0.90).abs() < 1e-12);
    }

    #[test]
    fn best_epoch_examples() {
        let epochs = [epoch(1, 0.94, 0.93), epoch(2, 0.99, 0.935)];
        assert_eq!(select_best_epoch(&epochs).unwrap().epoch_index, 1);
        assert_eq!(select_best_epoch(&epochs[1..]).unwrap().epoch_index, 2);
        let tied = [epoch(3, 0.9, 0.9), epoch(2, 0.9, 0.9)];
        assert_eq!(select_best_epoch(&tied).unwrap().epoch_index, 2);
        assert!(select_best_epoch(&[]).is_err());
    }
}
