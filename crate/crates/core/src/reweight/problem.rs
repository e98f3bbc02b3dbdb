use std::cell::OnceCell;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::spectral::{complete_bipartite_laplacian, EdgeList, Laplacian};

/// Fixed geometry of a reweighting run: the edge set and L_G for K_{n1,n2}.
#[derive(Debug)]
pub struct BarrierProblem {
    edges: EdgeList,
    lg: Laplacian,
    basis: OnceCell<DMatrix<f64>>,
}

impl BarrierProblem {
    /// Errors unless the edges connect all n1 + n2 vertices.
    pub fn new(edges: EdgeList) -> Result<Self> {
        if edges.is_empty() || !edges.is_connected() {
            return Err(Error::arg("edge set must connect every row and column vertex"));
        }
        let lg = complete_bipartite_laplacian(edges.n1(), edges.n2())?;
        Ok(Self { edges, lg, basis: OnceCell::new() })
    }

    pub fn edges(&self) -> &EdgeList {
        &self.edges
    }

    pub fn lg(&self) -> &Laplacian {
        &self.lg
    }

    pub fn n_vertices(&self) -> usize {
        self.edges.n_vertices()
    }

    /// Dimension of range(L_G).
    pub fn dim(&self) -> usize {
        self.n_vertices() - 1
    }

    /// Columns v_e = Rᵀb_e with R = EΛ^{-1/2} over the nonzero eigenpairs of L_G, so that
    /// Σ w_e v_e v_eᵀ = Rᵀ L̂ R represents L_G^{+/2} L̂ L_G^{+/2} on the range.
    pub fn vectors(&self) -> &DMatrix<f64> {
        self.basis.get_or_init(|| {
            let eig = SymmetricEigen::new(self.lg.to_dense());
            let n = self.n_vertices();
            let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 1e-9).collect();
            let r = DMatrix::from_fn(n, keep.len(), |a, c| {
                eig.eigenvectors[(a, keep[c])] / eig.eigenvalues[keep[c]].sqrt()
            });
            let m = self.edges.len();
            DMatrix::from_fn(keep.len(), m, |k, e| {
                let (a, b) = self.edges.endpoints(e);
                r[(a, k)] - r[(b, k)]
            })
        })
    }

    /// ‖v_e‖² = b_eᵀ L_G⁺ b_e. For K_{n1,n2} this is (n1 + n2 − 1)/(n1 n2) for every pair.
    pub fn atom_traces(&self) -> Vec<f64> {
        let (n1, n2) = (self.edges.n1() as f64, self.edges.n2() as f64);
        vec![(n1 + n2 - 1.0) / (n1 * n2); self.edges.len()]
    }

    /// Dense A = Σ w_e v_e v_eᵀ in range coordinates.
    pub fn operator(&self, w: &[f64]) -> DMatrix<f64> {
        weighted_gram(self.vectors(), w)
    }
}

/// V diag(w) Vᵀ for nonnegative w.
pub(crate) fn weighted_gram(v: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let cols: Vec<usize> = (0..w.len()).filter(|&e| w[e] > 0.0).collect();
    let b = DMatrix::from_fn(v.nrows(), cols.len(), |k, c| v[(k, cols[c])] * w[cols[c]].sqrt());
    &b * b.transpose()
}
