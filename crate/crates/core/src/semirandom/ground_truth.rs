use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::io::{read_dense_csv, write_dense_csv};
use crate::spectral::top_svd;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoherenceProfile {
    /// Uniformly random orthonormal factors.
    Haar,
    /// Haar factors with `spikes` rows pushed towards standard basis vectors; larger
    /// `strength` gives larger μ.
    Spiky { spikes: usize, strength: f64 },
    /// Rank one with both singular vectors proportional to all-ones (μ = 1).
    Flat,
}

/// Balanced low-rank factorization M* = U* V*ᵀ with U*ᵀU* = V*ᵀV* = diag(σ).
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub mu: f64,
    pub kappa: f64,
}

/// JSON sidecar stored next to the factor CSVs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthMeta {
    pub n1: usize,
    pub n2: usize,
    pub rank: usize,
    pub spectrum: Vec<f64>,
    pub mu: f64,
    pub kappa: f64,
}

impl GroundTruth {
    /// From orthonormal singular vectors and positive singular values.
    pub fn from_svd(x: &DMatrix<f64>, y: &DMatrix<f64>, sigma: &[f64]) -> Result<Self> {
        let r = sigma.len();
        if r == 0 || x.ncols() != r || y.ncols() != r {
            return Err(Error::arg("factor ranks disagree with spectrum"));
        }
        if sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::arg("singular values must be positive"));
        }
        let mut u = x.clone();
        let mut v = y.clone();
        for (k, s) in sigma.iter().enumerate() {
            let h = s.sqrt();
            u.column_mut(k).scale_mut(h);
            v.column_mut(k).scale_mut(h);
        }
        let mu = incoherence_of_bases(x, y);
        let kappa = sigma[0] / sigma[r - 1];
        Ok(Self { u, v, sigma: sigma.to_vec(), mu, kappa })
    }

    /// Rank-r truncated SVD of a given matrix.
    pub fn from_matrix(m: &DMatrix<f64>, r: usize) -> Result<Self> {
        let (x, s, y) = top_svd(m, r)?;
        if s.iter().any(|v| *v <= 1e-12 * s[0]) {
            return Err(Error::arg(format!("matrix has rank below {r}")));
        }
        Self::from_svd(&x, &y, &s)
    }

    pub fn n1(&self) -> usize {
        self.u.nrows()
    }

    pub fn n2(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma[0]
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma[self.rank() - 1]
    }

    pub fn m_star(&self) -> DMatrix<f64> {
        &self.u * self.v.transpose()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.u.row(i).dot(&self.v.row(j))
    }

    pub fn meta(&self) -> GroundTruthMeta {
        GroundTruthMeta {
            n1: self.n1(),
            n2: self.n2(),
            rank: self.rank(),
            spectrum: self.sigma.clone(),
            mu: self.mu,
            kappa: self.kappa,
        }
    }

    /// Writes `<stem>_u.csv`, `<stem>_v.csv`, `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        write_dense_csv(&dir.join(format!("{stem}_u.csv")), &self.u)?;
        write_dense_csv(&dir.join(format!("{stem}_v.csv")), &self.v)?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&self.meta())?)?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let u = read_dense_csv(&dir.join(format!("{stem}_u.csv")))?;
        let v = read_dense_csv(&dir.join(format!("{stem}_v.csv")))?;
        let meta: GroundTruthMeta =
            serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        if u.nrows() != meta.n1 || v.nrows() != meta.n2 || u.ncols() != meta.rank || v.ncols() != meta.rank {
            return Err(Error::Parse("ground-truth factors disagree with metadata".into()));
        }
        Ok(Self { u, v, sigma: meta.spectrum, mu: meta.mu, kappa: meta.kappa })
    }
}

fn incoherence_of_bases(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let r = x.ncols() as f64;
    let side = |b: &DMatrix<f64>| {
        let n = b.nrows() as f64;
        (0..b.nrows()).map(|i| b.row(i).norm_squared()).fold(0.0, f64::max) * n / r
    };
    side(x).max(side(y))
}

/// Smallest μ with ‖X_i‖² ≤ μr/n1 and ‖Y_j‖² ≤ μr/n2, where X, Y are the singular vectors
/// of `m` with singular value above 1e-10·σ₁.
pub fn incoherence(m: &DMatrix<f64>) -> Result<f64> {
    let k = m.nrows().min(m.ncols());
    if k == 0 || m.iter().all(|v| *v == 0.0) {
        return Err(Error::arg("incoherence of a zero matrix"));
    }
    let (x, s, y) = top_svd(m, k)?;
    let r = s.iter().filter(|v| **v > 1e-10 * s[0]).count();
    Ok(incoherence_of_bases(&x.columns(0, r).into_owned(), &y.columns(0, r).into_owned()))
}

fn orthonormal(g: DMatrix<f64>) -> DMatrix<f64> {
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // fix signs so the factor does not depend on the QR implementation's convention
    let mut q = q;
    for k in 0..q.ncols() {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

fn gaussian(n: usize, r: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n, r);
    for i in 0..n {
        for k in 0..r {
            g[(i, k)] = StandardNormal.sample(rng);
        }
    }
    g
}

pub fn make_ground_truth(
    n1: usize,
    n2: usize,
    r: usize,
    spectrum: &[f64],
    profile: &CoherenceProfile,
    seed: u64,
) -> Result<GroundTruth> {
    if r == 0 || r > n1.min(n2) {
        return Err(Error::arg(format!("rank {r} invalid for {n1}x{n2}")));
    }
    if spectrum.len() != r {
        return Err(Error::arg(format!("spectrum has {} values, rank is {r}", spectrum.len())));
    }
    if spectrum.iter().any(|s| !(*s > 0.0)) || spectrum.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::arg("spectrum must be positive and non-increasing"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, y) = match profile {
        CoherenceProfile::Haar => (orthonormal(gaussian(n1, r, &mut rng)), orthonormal(gaussian(n2, r, &mut rng))),
        CoherenceProfile::Spiky { spikes, strength } => {
            if *spikes > r || !(*strength >= 0.0) {
                return Err(Error::arg("spiky profile needs spikes ≤ r and strength ≥ 0"));
            }
            let spike = |n: usize, rng: &mut ChaCha8Rng| {
                let mut g = gaussian(n, r, rng);
                for k in 0..*spikes {
                    g[(k, k)] += strength * (n as f64).sqrt();
                }
                orthonormal(g)
            };
            (spike(n1, &mut rng), spike(n2, &mut rng))
        }
        CoherenceProfile::Flat => {
            if r != 1 {
                return Err(Error::arg("flat profile is rank one"));
            }
            (
                DMatrix::from_element(n1, 1, 1.0 / (n1 as f64).sqrt()),
                DMatrix::from_element(n2, 1, 1.0 / (n2 as f64).sqrt()),
            )
        }
    };
    GroundTruth::from_svd(&x, &y, spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_rank_one_has_unit_mu() {
        let gt = make_ground_truth(6, 9, 1, &[3.0], &CoherenceProfile::Flat, 0).unwrap();
        assert!((gt.mu - 1.0).abs() < 1e-12);
        assert!((incoherence(&gt.m_star()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_vector_is_maximally_coherent() {
        let mut m = DMatrix::zeros(7, 7);
        m[(0, 0)] = 1.0;
        assert!((incoherence(&m).unwrap() - 7.0).abs() < 1e-12);
        assert!(incoherence(&DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn balanced_and_spectrum() {
        let gt = make_ground_truth(20, 15, 3, &[4.0, 2.0, 1.0], &CoherenceProfile::Haar, 5).unwrap();
        let gu = gt.u.transpose() * &gt.u;
        let gv = gt.v.transpose() * &gt.v;
        assert!((gu - &gv).abs().max() < 1e-12);
        assert!((gv - DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 2.0, 1.0]))).abs().max() < 1e-12);
        assert_eq!(gt.kappa, 4.0);
        assert!((gt.mu - incoherence(&gt.m_star()).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn spiky_is_more_coherent() {
        let h = make_ground_truth(60, 60, 2, &[1.0, 1.0], &CoherenceProfile::Haar, 1).unwrap();
        let s = make_ground_truth(60, 60, 2, &[1.0, 1.0], &CoherenceProfile::Spiky { spikes: 2, strength: 5.0 }, 1).unwrap();
        assert!(s.mu > 2.0 * h.mu);
    }

    #[test]
    fn rejects_bad_spectrum() {
        assert!(make_ground_truth(5, 5, 2, &[1.0, 2.0], &CoherenceProfile::Haar, 0).is_err());
        assert!(make_ground_truth(5, 5, 2, &[1.0], &CoherenceProfile::Haar, 0).is_err());
        assert!(make_ground_truth(5, 5, 6, &[1.0; 6], &CoherenceProfile::Haar, 0).is_err());
        assert!(make_ground_truth(5, 5, 2, &[1.0, 1.0], &CoherenceProfile::Flat, 0).is_err());
    }
}
