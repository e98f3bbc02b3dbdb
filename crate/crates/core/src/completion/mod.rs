//! Weighted Burer–Monteiro matrix completion: objectives, derivatives, perturbed gradient
//! descent, alignment, and the numeric checks used to validate local-minimum theory.

mod align;
mod diagnostics;
mod init;
mod norms;
mod objective;
mod pgd;
mod regularizer;

pub use align::{optimal_rotation, AlignmentResult};
pub use diagnostics::{
    asymmetric_curvature_check, check_norm_preservation, distance_relations, recovery_error,
    row_norm_diagnostics, symmetric_curvature_identity, DistanceRelations, CurvatureCheck, NormPreservation,
    RowNormReport, ROW_NORM_CONSTANT,
};
pub use init::svd_initialize;
pub use norms::{weighted_inner, weighted_norm_sq};
pub use objective::{
    gradient, hessian_quadratic_form, objective, AsymmetricObjective, Factorization,
    SmoothObjective, SymmetricObjective, WeightedEntries,
};
pub use pgd::{estimate_sigma1, pgd, solve_pgd, PgdHyper, PgdOutcome, TraceRow};
pub use regularizer::{regularizer_curvature, RegularizerParams};
