//! Matrix completion that survives a semi-random adversary.
//!
//! The pipeline: generate an incoherent low-rank ground truth, reveal entries at random,
//! let an adversary reveal more, reweight the revealed pattern so it looks spectrally like
//! the complete bipartite graph, then run a weighted Burer–Monteiro solver.
//!
//! Modules, bottom-up:
//! - [`spectral`]: Laplacians, CG, eigen-extremes, Taylor matrix polynomials, JL sketches.
//! - [`semirandom`]: ground truths, observation sets, adversaries, counter-examples.
//! - [`completion`]: weighted objectives, gradients, Hessian forms, PGD, diagnostics.
//! - [`reweight`]: barrier-potential reweighting with an exact and a fast backend.
//! - [`harness`]: pipeline configuration, artifacts, reports.

// NaN must fail range checks, hence `!(x > 0.0)`
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod completion;
pub mod error;
pub mod harness;
pub mod reweight;
pub mod semirandom;
pub mod spectral;

pub use error::{Error, Result};
