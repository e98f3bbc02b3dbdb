use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default multiplier in k = ceil(c_JL·ln(n)/ε²).
pub const DEFAULT_C_JL: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    pub k: usize,
    pub seed: u64,
    pub eps_jl: f64,
    pub c_jl: f64,
}

impl SketchConfig {
    /// Sketch dimension for preserving norms of about `n` vectors (pairwise distances of
    /// n points) within 1 ± eps_jl.
    pub fn new(n: usize, eps_jl: f64, seed: u64) -> Result<Self> {
        Self::with_constant(n, eps_jl, seed, DEFAULT_C_JL)
    }

    pub fn with_constant(n: usize, eps_jl: f64, seed: u64, c_jl: f64) -> Result<Self> {
        if !(eps_jl > 0.0 && eps_jl < 1.0) {
            return Err(Error::arg(format!("JL distortion {eps_jl} outside (0,1)")));
        }
        if !(c_jl > 0.0) {
            return Err(Error::arg("JL constant must be positive"));
        }
        let k = ((c_jl * (n.max(2) as f64).ln()) / (eps_jl * eps_jl)).ceil() as usize;
        Ok(Self { k: k.max(1), seed, eps_jl, c_jl })
    }

    pub fn matrix(&self, dim: usize) -> Result<DMatrix<f64>> {
        jl_sketch(self.k, dim, self.seed)
    }
}

/// k×n matrix with i.i.d. N(0, 1/k) entries, so E‖Qx‖² = ‖x‖².
pub fn jl_sketch(k: usize, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if k == 0 || n == 0 {
        return Err(Error::arg("sketch dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = 1.0 / (k as f64).sqrt();
    // fill row-major so the matrix for a given seed does not depend on storage order
    let mut q = DMatrix::zeros(k, n);
    for i in 0..k {
        for j in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            q[(i, j)] = s * z;
        }
    }
    Ok(q)
}
