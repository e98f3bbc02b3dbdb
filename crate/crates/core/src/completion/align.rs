use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentResult {
    /// Orthonormal r×r minimizer of ‖Z − Z*R‖_F.
    pub rotation: DMatrix<f64>,
    /// Δ = Z − Z*R
    pub delta: DMatrix<f64>,
    pub delta_norm: f64,
    /// ‖ΔΔᵀ‖_F
    pub delta_outer_norm: f64,
    /// Set when Z* = 0 and R = I was returned by convention.
    pub degenerate: bool,
}

/// Procrustes: R = PQᵀ from the SVD (Z*)ᵀZ = PΣQᵀ.
pub fn optimal_rotation(z: &DMatrix<f64>, z_star: &DMatrix<f64>) -> Result<AlignmentResult> {
    if z.shape() != z_star.shape() {
        return Err(Error::arg(format!("shapes differ: {:?} vs {:?}", z.shape(), z_star.shape())));
    }
    let r = z.ncols();
    let degenerate = z_star.iter().all(|v| *v == 0.0);
    let rotation = if degenerate {
        DMatrix::identity(r, r)
    } else {
        let svd = SVD::new(z_star.transpose() * z, true, true);
        let p = svd.u.ok_or_else(|| Error::Internal("SVD without U".into()))?;
        let qt = svd.v_t.ok_or_else(|| Error::Internal("SVD without Vᵀ".into()))?;
        p * qt
    };
    let delta = z - z_star * &rotation;
    let delta_norm = delta.norm();
    // ‖ΔΔᵀ‖_F = ‖ΔᵀΔ‖_F, cheaper for tall Δ
    let delta_outer_norm = (delta.transpose() * &delta).norm();
    Ok(AlignmentResult { rotation, delta, delta_norm, delta_outer_norm, degenerate })
}
