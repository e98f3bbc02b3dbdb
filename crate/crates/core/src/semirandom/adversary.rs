use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ground_truth::GroundTruth;
use super::observations::{sample_uniform_observations, Observation, ObservationSet, Provenance};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryKind {
    None,
    /// Entry (i, j) ends up revealed with probability probs[i][j] ≥ base_p, assuming the
    /// input was sampled uniformly at rate base_p.
    ProbabilityMatrix { base_p: f64, probs: Vec<Vec<f64>> },
    /// Like `ProbabilityMatrix` with p_ij = base_p·weights[I][J] for block I ∋ i, J ∋ j.
    BlockPattern { base_p: f64, row_blocks: Vec<usize>, col_blocks: Vec<usize>, weights: Vec<Vec<f64>> },
    /// Reveal the listed rows completely.
    DenseRows { rows: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryStrategy {
    #[serde(flatten)]
    pub kind: AdversaryKind,
    #[serde(default)]
    pub seed: u64,
}

impl AdversaryStrategy {
    pub fn none() -> Self {
        Self { kind: AdversaryKind::None, seed: 0 }
    }

    /// Resolve to a full probability grid, or None for kinds that are not probabilistic.
    fn probabilities(&self, n1: usize, n2: usize) -> Result<Option<(f64, DMatrix<f64>)>> {
        match &self.kind {
            AdversaryKind::ProbabilityMatrix { base_p, probs } => {
                if probs.len() != n1 || probs.iter().any(|r| r.len() != n2) {
                    return Err(Error::arg(format!("probability grid must be {n1}x{n2}")));
                }
                Ok(Some((*base_p, DMatrix::from_fn(n1, n2, |i, j| probs[i][j]))))
            }
            AdversaryKind::BlockPattern { base_p, row_blocks, col_blocks, weights } => {
                if row_blocks.iter().sum::<usize>() != n1 || col_blocks.iter().sum::<usize>() != n2 {
                    return Err(Error::arg("block sizes do not cover the grid"));
                }
                if weights.len() != row_blocks.len() || weights.iter().any(|r| r.len() != col_blocks.len()) {
                    return Err(Error::arg("block weight table has the wrong shape"));
                }
                let owner = |sizes: &[usize]| -> Vec<usize> {
                    sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect()
                };
                let (rb, cb) = (owner(row_blocks), owner(col_blocks));
                Ok(Some((*base_p, DMatrix::from_fn(n1, n2, |i, j| base_p * weights[rb[i]][cb[j]]))))
            }
            _ => Ok(None),
        }
    }
}

fn check_probabilities(base_p: f64, probs: &DMatrix<f64>) -> Result<()> {
    if !(base_p > 0.0 && base_p <= 1.0) {
        return Err(Error::arg(format!("base probability {base_p} outside (0,1]")));
    }
    for v in probs.iter() {
        if !(*v <= 1.0 + 1e-12) {
            return Err(Error::arg(format!("reveal probability {v} exceeds 1")));
        }
        if !(*v >= base_p - 1e-12) {
            return Err(Error::arg(format!("reveal probability {v} below base rate {base_p}")));
        }
    }
    Ok(())
}

/// Reveal additional entries. Never removes anything; new entries carry ground-truth values
/// and are flagged adversarial.
pub fn adversary_add(obs: &ObservationSet, gt: &GroundTruth, strategy: &AdversaryStrategy) -> Result<ObservationSet> {
    let (n1, n2) = (obs.n1(), obs.n2());
    if gt.n1() != n1 || gt.n2() != n2 {
        return Err(Error::arg("ground truth and observations differ in shape"));
    }
    let mut entries = obs.entries().to_vec();
    let mut add = |i: usize, j: usize| {
        entries.push(Observation { i, j, value: gt.entry(i, j), provenance: Provenance::Adversarial });
    };
    match &strategy.kind {
        AdversaryKind::None => {}
        AdversaryKind::DenseRows { rows } => {
            if let Some(r) = rows.iter().find(|&&r| r >= n1) {
                return Err(Error::arg(format!("row {r} out of range")));
            }
            let mut rows = rows.clone();
            rows.sort_unstable();
            rows.dedup();
            for &i in &rows {
                for j in 0..n2 {
                    if !obs.contains(i, j) {
                        add(i, j);
                    }
                }
            }
        }
        _ => {
            let (base_p, probs) = strategy.probabilities(n1, n2)?.expect("probabilistic kind");
            check_probabilities(base_p, &probs)?;
            let mut rng = ChaCha8Rng::seed_from_u64(strategy.seed);
            for i in 0..n1 {
                for j in 0..n2 {
                    // draw for every cell so the stream does not depend on the input set
                    let coin: f64 = rng.random();
                    if obs.contains(i, j) || base_p >= 1.0 {
                        continue;
                    }
                    let q = ((probs[(i, j)] - base_p) / (1.0 - base_p)).clamp(0.0, 1.0);
                    if coin < q {
                        add(i, j);
                    }
                }
            }
        }
    }
    ObservationSet::new(n1, n2, entries)
}

/// Semi-random instance whose scaled reveal indicator has expectation `w`: uniform sampling
/// at rate p, then the adversary lifts entry (i, j) to probability p·w_ij.
pub fn weighted_to_semirandom(w: &DMatrix<f64>, p: f64, gt: &GroundTruth, seed: u64) -> Result<ObservationSet> {
    if w.nrows() != gt.n1() || w.ncols() != gt.n2() {
        return Err(Error::arg("weight matrix and ground truth differ in shape"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::arg(format!("probability {p} outside (0,1]")));
    }
    if p * w.max() > 1.0 {
        return Err(Error::arg(format!("p·max(W) = {} exceeds 1", p * w.max())));
    }
    if w.min() < 1.0 {
        return Err(Error::arg("weights below 1 would reveal entries with probability under p"));
    }
    let base = sample_uniform_observations(gt, p, seed)?;
    let probs = (0..w.nrows()).map(|i| (0..w.ncols()).map(|j| p * w[(i, j)]).collect()).collect();
    let strategy = AdversaryStrategy {
        kind: AdversaryKind::ProbabilityMatrix { base_p: p, probs },
        seed: seed ^ 0x9e37_79b9_7f4a_7c15,
    };
    adversary_add(&base, gt, &strategy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semirandom::{make_ground_truth, CoherenceProfile};

    fn gt() -> GroundTruth {
        make_ground_truth(6, 5, 1, &[1.0], &CoherenceProfile::Haar, 2).unwrap()
    }

    #[test]
    fn none_is_identity() {
        let o = sample_uniform_observations(&gt(), 0.3, 4).unwrap();
        assert_eq!(adversary_add(&o, &gt(), &AdversaryStrategy::none()).unwrap(), o);
    }

    #[test]
    fn dense_rows_fill_rows() {
        let o = sample_uniform_observations(&gt(), 0.3, 4).unwrap();
        let s = AdversaryStrategy { kind: AdversaryKind::DenseRows { rows: vec![0, 2, 5] }, seed: 0 };
        let a = adversary_add(&o, &gt(), &s).unwrap();
        for i in [0, 2, 5] {
            assert!((0..5).all(|j| a.contains(i, j)));
        }
        assert!(o.entries().iter().all(|e| a.find(e.i, e.j) == Some(e)));
        assert_eq!(a.max_deviation(&gt()), 0.0);
    }

    #[test]
    fn probability_below_base_rejected() {
        let o = sample_uniform_observations(&gt(), 0.3, 4).unwrap();
        let s = AdversaryStrategy {
            kind: AdversaryKind::ProbabilityMatrix { base_p: 0.3, probs: vec![vec![0.2; 5]; 6] },
            seed: 0,
        };
        assert!(adversary_add(&o, &gt(), &s).is_err());
    }

    #[test]
    fn all_ones_weights_is_uniform_sampling() {
        let w = DMatrix::from_element(6, 5, 1.0);
        let a = weighted_to_semirandom(&w, 0.4, &gt(), 8).unwrap();
        assert_eq!(a.count(Provenance::Adversarial), 0);
        assert_eq!(a, sample_uniform_observations(&gt(), 0.4, 8).unwrap());
    }

    #[test]
    fn probability_over_one_rejected() {
        let w = DMatrix::from_element(6, 5, 3.0);
        assert!(weighted_to_semirandom(&w, 0.5, &gt(), 0).is_err());
    }

    #[test]
    fn strategy_json_round_trip() {
        let s = AdversaryStrategy { kind: AdversaryKind::DenseRows { rows: vec![1, 2] }, seed: 3 };
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<AdversaryStrategy>(&text).unwrap(), s);
    }
}
