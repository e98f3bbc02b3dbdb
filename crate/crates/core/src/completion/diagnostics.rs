use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::align::optimal_rotation;
use super::objective::{AsymmetricObjective, Factorization, SmoothObjective, SymmetricObjective};
use super::regularizer::regularizer_curvature;
use crate::error::{Error, Result};
use crate::semirandom::GroundTruth;
use crate::spectral::spectral_norm;

/// Constant in front of the stationary-point row-norm bounds. Calibrated on converged PGD
/// runs, where the largest observed ratio stayed below 0.2.
pub const ROW_NORM_CONSTANT: f64 = 1.0;

/// ‖UVᵀ − M*‖²_F / ‖M*‖²_F
pub fn recovery_error(f: &Factorization, gt: &GroundTruth) -> Result<f64> {
    if f.u.nrows() != gt.n1() || f.v.nrows() != gt.n2() {
        return Err(Error::arg("factor shapes differ from the ground truth"));
    }
    let m_star = gt.m_star();
    let denom = m_star.norm_squared();
    if denom == 0.0 {
        return Err(Error::arg("ground truth is zero"));
    }
    Ok((f.product() - m_star).norm_squared() / denom)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormPreservation {
    /// |‖XYᵀ‖²_W − ‖XYᵀ‖²_F| by direct summation.
    pub lhs: f64,
    /// Same quantity through row-wise Khatri–Rao products.
    pub lhs_khatri_rao: f64,
    /// ‖W−J‖·‖X‖_F·‖Y‖_F·max‖X_i‖·max‖Y_j‖
    pub rhs: f64,
    pub w_minus_j_norm: f64,
}

impl NormPreservation {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-300
    }

    /// Relative disagreement of the two evaluation routes.
    pub fn route_gap(&self) -> f64 {
        (self.lhs - self.lhs_khatri_rao).abs() / self.lhs.abs().max(self.lhs_khatri_rao.abs()).max(1e-300)
    }
}

/// Row i of the result is the Kronecker product of row i with itself.
fn khatri_rao_square(x: &DMatrix<f64>) -> DMatrix<f64> {
    let r = x.ncols();
    DMatrix::from_fn(x.nrows(), r * r, |i, c| x[(i, c / r)] * x[(i, c % r)])
}

fn max_row(x: &DMatrix<f64>) -> f64 {
    (0..x.nrows()).map(|i| x.row(i).norm()).fold(0.0, f64::max)
}

/// Both sides of the weighted-norm preservation inequality for XYᵀ.
pub fn check_norm_preservation(x: &DMatrix<f64>, y: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<NormPreservation> {
    if x.ncols() != y.ncols() || w.shape() != (x.nrows(), y.nrows()) {
        return Err(Error::arg("incompatible shapes for X, Y, W"));
    }
    let d = w.map(|v| v - 1.0);
    let m = x * y.transpose();
    let direct: f64 = d.iter().zip(m.iter()).map(|(dij, mij)| dij * mij * mij).sum();
    let kx = khatri_rao_square(x);
    let ky = khatri_rao_square(y);
    let kr = kx.dot(&(&d * ky));
    let w_minus_j_norm = spectral_norm(&d);
    let rhs = w_minus_j_norm * x.norm() * y.norm() * max_row(x) * max_row(y);
    Ok(NormPreservation { lhs: direct.abs(), lhs_khatri_rao: kr.abs(), rhs, w_minus_j_norm })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowNormReport {
    /// False when the gradient is above tolerance; the bounds only apply at stationary points.
    pub applicable: bool,
    pub max_row_u_sq: f64,
    pub max_row_v_sq: f64,
    pub bound_u: f64,
    pub bound_v: f64,
}

impl RowNormReport {
    pub fn within_bounds(&self) -> bool {
        self.max_row_u_sq <= self.bound_u && self.max_row_v_sq <= self.bound_v
    }

    /// Largest measured/bound ratio; the empirical constant.
    pub fn ratio(&self) -> f64 {
        (self.max_row_u_sq / self.bound_u).max(self.max_row_v_sq / self.bound_v)
    }
}

/// Max squared row norms against c·μ³r³κ²σ₁/n (asymmetric stationary-point bound).
pub fn row_norm_diagnostics(f: &Factorization, gt: &GroundTruth, grad_norm: f64, grad_tol: f64) -> RowNormReport {
    let sq = |x: &DMatrix<f64>| max_row(x).powi(2);
    let r = gt.rank() as f64;
    let scale = ROW_NORM_CONSTANT * gt.mu.powi(3) * r.powi(3) * gt.kappa.powi(2) * gt.sigma_max();
    RowNormReport {
        applicable: grad_norm <= grad_tol,
        max_row_u_sq: sq(&f.u),
        max_row_v_sq: sq(&f.v),
        bound_u: scale / gt.n1() as f64,
        bound_v: scale / gt.n2() as f64,
    }
}

/// Symmetric-case distance relations for aligned Δ = U − U*R.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceRelations {
    pub outer_sq: f64,
    pub delta_sq: f64,
    pub m_diff_sq: f64,
    pub sigma_r: f64,
}

impl DistanceRelations {
    /// ‖ΔΔᵀ‖² ≤ 2‖M−M*‖²
    pub fn outer_holds(&self) -> bool {
        self.outer_sq <= 2.0 * self.m_diff_sq * (1.0 + 1e-10) + 1e-12
    }

    /// σ_r‖Δ‖² ≤ ‖M−M*‖² / (2(√2−1))
    pub fn delta_holds(&self) -> bool {
        let c = 1.0 / (2.0 * (2f64.sqrt() - 1.0));
        self.sigma_r * self.delta_sq <= c * self.m_diff_sq * (1.0 + 1e-10) + 1e-12
    }
}

pub fn distance_relations(u: &DMatrix<f64>, u_star: &DMatrix<f64>) -> Result<DistanceRelations> {
    let a = optimal_rotation(u, u_star)?;
    let m_diff = u * u.transpose() - u_star * u_star.transpose();
    let gram = u_star.transpose() * u_star;
    let sigma_r = SymmetricEigen::new(gram).eigenvalues.min().max(0.0);
    Ok(DistanceRelations {
        outer_sq: a.delta_outer_norm.powi(2),
        delta_sq: a.delta_norm.powi(2),
        m_diff_sq: m_diff.norm_squared(),
        sigma_r,
    })
}

/// Second-order test along Δ: `lhs` = [∇²f](Δ) − 4⟨∇f, Δ⟩, `rhs` the closed-form bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureCheck {
    pub hessian: f64,
    pub first_order: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs predicted in closed form (0 for the symmetric identity).
    pub predicted_gap: f64,
    pub delta_norm_sq: f64,
}

impl CurvatureCheck {
    pub fn holds(&self, rel: f64) -> bool {
        self.lhs <= self.rhs + rel * (1.0 + self.lhs.abs().max(self.rhs.abs()))
    }

    /// |(rhs − lhs) − predicted_gap| relative to the magnitudes involved.
    pub fn identity_error(&self) -> f64 {
        let scale = 1.0 + self.lhs.abs().max(self.rhs.abs()).max(self.predicted_gap.abs());
        ((self.rhs - self.lhs) - self.predicted_gap).abs() / scale
    }
}

fn entries_norm_sq(rows: &[usize], cols: &[usize], weights: &[f64], m: &DMatrix<f64>) -> f64 {
    (0..rows.len()).map(|e| weights[e] * m[(rows[e], cols[e])].powi(2)).sum()
}

/// Symmetric objective at U with Δ = U − U*R (R optimal):
/// [∇²f](Δ) − 4⟨∇f,Δ⟩ = ‖ΔΔᵀ‖²_W − 3‖M−M*‖²_W + ([∇²Q](Δ) − 4⟨∇Q,Δ⟩) exactly.
pub fn symmetric_curvature_identity(
    obj: &SymmetricObjective,
    u: &DMatrix<f64>,
    u_star: &DMatrix<f64>,
) -> Result<CurvatureCheck> {
    let a = optimal_rotation(u, u_star)?;
    let delta = &a.delta;
    let hessian = obj.hessian_form(u, delta);
    let first_order = obj.gradient(u).dot(delta);
    let d = &obj.data;
    let outer = delta * delta.transpose();
    let m_diff = u * u.transpose() - u_star * u_star.transpose();
    let mut rhs = entries_norm_sq(&d.rows, &d.cols, &d.weights, &outer)
        - 3.0 * entries_norm_sq(&d.rows, &d.cols, &d.weights, &m_diff);
    if let Some(p) = obj.reg {
        rhs += regularizer_curvature(u, delta, p.alpha1, p.lambda1);
    }
    Ok(CurvatureCheck {
        hessian,
        first_order,
        lhs: hessian - 4.0 * first_order,
        rhs,
        predicted_gap: 0.0,
        delta_norm_sq: a.delta_norm.powi(2),
    })
}

/// ‖X‖²_{W̄} with W̄ = [[J, 2W−J], [2Wᵀ−J, J]] for a symmetric (n1+n2)-square X.
fn wbar_norm_sq(x: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    let (n1, n2) = w.shape();
    let x12 = x.view((0, n1), (n1, n2));
    let off: f64 = w.iter().zip(x12.iter()).map(|(wij, v)| (2.0 * wij - 1.0) * v * v).sum();
    x.view((0, 0), (n1, n1)).norm_squared() + x.view((n1, n1), (n2, n2)).norm_squared() + 2.0 * off
}

/// Asymmetric objective at Z with Δ = Z − Z*R (R optimal). With balanced Z*,
/// [∇²f](Δ) − 4⟨∇f,Δ⟩ = ‖ΔΔᵀ‖²_{W̄} − 3‖N−N*‖²_{W̄} + ([∇²Q](Δ) − 4⟨∇Q,Δ⟩) − 6‖Z*ᵀDΔ‖²
/// where D = diag(I, −I), so the bound without the last term holds at every Z.
/// Observed values must equal M* on the support of W.
pub fn asymmetric_curvature_check(obj: &AsymmetricObjective, z: &DMatrix<f64>, z_star: &DMatrix<f64>) -> Result<CurvatureCheck> {
    let n1 = obj.data.n1;
    let a = optimal_rotation(z, z_star)?;
    let delta = &a.delta;
    let hessian = obj.hessian_form(z, delta);
    let first_order = obj.gradient(z).dot(delta);
    let w = obj.data.weight_dense();
    let outer = delta * delta.transpose();
    let n_diff = z * z.transpose() - z_star * z_star.transpose();
    let mut rhs = wbar_norm_sq(&outer, &w) - 3.0 * wbar_norm_sq(&n_diff, &w);
    if let Some(p) = obj.reg {
        let (du, dv) = (delta.rows(0, n1).into_owned(), delta.rows(n1, obj.data.n2).into_owned());
        let (u, v) = (z.rows(0, n1).into_owned(), z.rows(n1, obj.data.n2).into_owned());
        rhs += regularizer_curvature(&u, &du, p.alpha1, p.lambda1);
        rhs += regularizer_curvature(&v, &dv, p.alpha2, p.lambda2);
    }
    let mut sd = delta.clone();
    sd.rows_mut(n1, obj.data.n2).neg_mut();
    let x = z_star.transpose() * sd;
    Ok(CurvatureCheck {
        hessian,
        first_order,
        lhs: hessian - 4.0 * first_order,
        rhs,
        predicted_gap: 6.0 * x.norm_squared(),
        delta_norm_sq: a.delta_norm.powi(2),
    })
}
