//! Barrier-potential reweighting of a bipartite observation graph.

mod config;
mod driver;
mod exact;
mod fast;
mod problem;
mod sdp;
mod weights;

pub use config::{Backend, ReweightConfig};
pub use driver::{
    advance, barrier_step, compute_rho, edge_scores, estimate_beta, normalized_spectrum, reweight, reweight_problem,
    BarrierState, IterationRecord, ReweightOutcome, RunLog, INITIAL_L, INITIAL_U, POTENTIAL_SLACK,
};
pub use exact::first_order_slack;
pub use problem::BarrierProblem;
pub use sdp::{solve_packing_sdp, SdpSolution};
pub use weights::{weights_to_w, WeightMatrix, WeightReport};
