use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semirandom::GroundTruth;

/// Row-norm penalty Q = λ₁Σ(‖U_i‖−α₁)₊⁴ + λ₂Σ(‖V_j‖−α₂)₊⁴. The symmetric objective uses
/// only (α₁, λ₁).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizerParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub c: f64,
}

impl RegularizerParams {
    pub const DEFAULT_C: f64 = 10.0;

    /// α₁² = Cμrσ₁/n₁, α₂² = Cμrσ₁/n₂, λ₁ = λ₂ = C²n₁/(μrκ).
    pub fn from_parameters(n1: usize, n2: usize, r: usize, mu: f64, sigma1: f64, kappa: f64, c: f64) -> Result<Self> {
        if !(c > 0.0 && mu > 0.0 && sigma1 > 0.0 && kappa > 0.0) || r == 0 {
            return Err(Error::arg("regularizer inputs must be positive"));
        }
        let base = c * mu * r as f64 * sigma1;
        let lambda = c * c * n1 as f64 / (mu * r as f64 * kappa);
        Ok(Self {
            alpha1: (base / n1 as f64).sqrt(),
            alpha2: (base / n2 as f64).sqrt(),
            lambda1: lambda,
            lambda2: lambda,
            c,
        })
    }

    pub fn for_ground_truth(gt: &GroundTruth, c: f64) -> Result<Self> {
        Self::from_parameters(gt.n1(), gt.n2(), gt.rank(), gt.mu, gt.sigma_max(), gt.kappa, c)
    }

    /// Symmetric n×n case: α² = Cμrσ₁/n, λ = C²n/(μrκ).
    pub fn symmetric(n: usize, r: usize, mu: f64, sigma1: f64, kappa: f64, c: f64) -> Result<Self> {
        Self::from_parameters(n, n, r, mu, sigma1, kappa, c)
    }
}

/// Per-block penalty λΣ(‖z_i‖−α)₊⁴ and its derivatives.
#[derive(Clone, Copy, Debug)]
pub(crate) struct RowPenalty {
    pub alpha: f64,
    pub lambda: f64,
}

impl RowPenalty {
    fn rows<'a>(&self, z: &'a DMatrix<f64>) -> impl Iterator<Item = (usize, f64, f64)> + 'a {
        let alpha = self.alpha;
        (0..z.nrows()).filter_map(move |i| {
            let r = z.row(i).norm();
            let s = r - alpha;
            (s > 0.0).then_some((i, r, s))
        })
    }

    pub fn value(&self, z: &DMatrix<f64>) -> f64 {
        self.lambda * self.rows(z).map(|(_, _, s)| s.powi(4)).sum::<f64>()
    }

    /// Row i: 4λ s³ z_i/‖z_i‖; rows under the threshold (including zero rows) contribute 0.
    pub fn add_gradient(&self, z: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        for (i, r, s) in self.rows(z) {
            let c = 4.0 * self.lambda * s.powi(3) / r;
            for k in 0..z.ncols() {
                out[(i, k)] += c * z[(i, k)];
            }
        }
    }

    /// d²/dt² of the penalty along `d`.
    pub fn hessian_form(&self, z: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
        let mut total = 0.0;
        for (i, r, s) in self.rows(z) {
            let zd = z.row(i).dot(&d.row(i));
            let dd = d.row(i).norm_squared();
            total += 4.0 * self.lambda * (3.0 * s * s * zd * zd / (r * r) + s.powi(3) * (dd / r - zd * zd / r.powi(3)));
        }
        total
    }

    /// d/dt of the gradient along `d`.
    pub fn add_hessian_vec(&self, z: &DMatrix<f64>, d: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        for (i, r, s) in self.rows(z) {
            let zd = z.row(i).dot(&d.row(i));
            let a = 12.0 * self.lambda * s * s / (r * r);
            let b = 4.0 * self.lambda * s.powi(3) / r;
            for k in 0..z.ncols() {
                let zk = z[(i, k)];
                out[(i, k)] += a * zd * zk + b * (d[(i, k)] - zd * zk / (r * r));
            }
        }
    }
}

/// [∇²Q](Δ) − 4⟨∇Q, Δ⟩ for a single row-norm penalty block.
pub fn regularizer_curvature(z: &DMatrix<f64>, delta: &DMatrix<f64>, alpha: f64, lambda: f64) -> f64 {
    let q = RowPenalty { alpha, lambda };
    let mut g = DMatrix::zeros(z.nrows(), z.ncols());
    q.add_gradient(z, &mut g);
    q.hessian_form(z, delta) - 4.0 * g.dot(delta)
}
