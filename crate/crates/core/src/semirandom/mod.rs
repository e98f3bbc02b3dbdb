//! Instance generation: incoherent ground truths, random revelation, semi-random
//! adversaries, and the two counter-example constructions.

mod adversary;
mod counterexample;
mod ground_truth;
mod observations;

pub use adversary::{adversary_add, weighted_to_semirandom, AdversaryKind, AdversaryStrategy};
pub use counterexample::{
    block_representative, counterexample_rank1, counterexample_rank2, expand_blocks, rank1_gamma,
    Rank1Counterexample, Rank2Counterexample,
};
pub use ground_truth::{incoherence, make_ground_truth, CoherenceProfile, GroundTruth, GroundTruthMeta};
pub use observations::{sample_uniform_observations, Observation, ObservationSet, Provenance};
