//! Synthetic inputs for the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tradeoff_core::{Candidate, Paradigm};

/// `n` candidates on one dataset with F1, cost and latency drawn uniformly
/// from realistic ranges.
pub fn synthetic_candidates(n: usize, seed: u64) -> Vec<Candidate> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| Candidate {
            dataset_id: "synthetic".into(),
            model_id: format!("model-{i:05}"),
            paradigm: Paradigm::FineTuned,
            f1: rng.random_range(0.5..1.0),
            cost_usd_per_million: rng.random_range(1.0..3000.0),
            p50_latency_ms: rng.random_range(20.0..2500.0),
        })
        .collect()
}

/// A latency trace of `n` samples with a slow warm-up prefix.
pub fn synthetic_trace(n: usize, warmup: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let base = rng.random_range(80.0..400.0);
            if i < warmup {
                base * 4.0
            } else {
                base
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(synthetic_candidates(5, 7), synthetic_candidates(5, 7));
        assert_eq!(synthetic_trace(20, 10, 1).len(), 20);
    }
}
