use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// ⟨A, B⟩_W = Σ W_ij A_ij B_ij
pub fn weighted_inner(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() || a.shape() != w.shape() {
        return Err(Error::arg(format!(
            "shape mismatch: {:?}, {:?}, {:?}",
            a.shape(),
            b.shape(),
            w.shape()
        )));
    }
    Ok(a.iter().zip(b.iter()).zip(w.iter()).map(|((x, y), z)| x * y * z).sum())
}

/// ‖A‖²_W. Nonnegative whenever W is.
pub fn weighted_norm_sq(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<f64> {
    weighted_inner(a, a, w)
}
