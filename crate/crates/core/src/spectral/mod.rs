//! Numerical substrate: bipartite graphs and their Laplacians, a Laplacian CG solver,
//! extreme eigenvalues, Taylor matrix polynomials, and Johnson–Lindenstrauss sketches.

mod dense;
mod eigen;
mod graph;
pub mod io;
mod poly;
mod sketch;
mod solve;

pub use dense::{principal_angles, spectral_norm, top_svd};
pub use eigen::{extreme_eigs, DenseOperator, EigenBackend, SymmetricOperator};
pub use graph::{
    build_laplacian, complete_bipartite_laplacian, normalized_adjacency_gap, EdgeList, Laplacian,
};
pub use poly::{
    build_poly_exp_half_inv, build_poly_exp_inv_half, build_poly_inv_square, exp_taylor, Affine,
    MatrixPolynomial, PolyTarget,
};
pub use sketch::{jl_sketch, SketchConfig, DEFAULT_C_JL};
pub use solve::{solve_pseudo, solve_spd, SolveStats};
