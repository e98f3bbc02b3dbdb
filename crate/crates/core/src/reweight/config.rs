use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::DEFAULT_C_JL;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Dense eigendecompositions in the range of L_G.
    #[default]
    Exact,
    /// Polynomial approximations applied through Laplacian solves, with JL sketches.
    Fast,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "fast" => Ok(Backend::Fast),
            other => Err(Error::arg(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReweightConfig {
    pub beta: f64,
    pub eps: f64,
    pub backend: Backend,
    pub seed: u64,
    /// Iteration cap is ceil(c_iter·ln²n/ε²).
    pub c_iter: f64,
    /// Overrides the computed iteration cap when set.
    pub max_iters: Option<usize>,
    /// Packing SDP solver iteration budget per restart.
    pub sdp_iters: usize,
    /// JL distortion for fast-backend scores; ε/4 when unset.
    #[serde(default)]
    pub jl_eps: Option<f64>,
    #[serde(default = "default_c_jl")]
    pub c_jl: f64,
}

fn default_c_jl() -> f64 {
    DEFAULT_C_JL
}

impl ReweightConfig {
    pub const DEFAULT_C_ITER: f64 = 64.0;

    pub fn new(beta: f64, eps: f64) -> Result<Self> {
        let cfg = Self {
            beta,
            eps,
            backend: Backend::Exact,
            seed: 0,
            c_iter: Self::DEFAULT_C_ITER,
            max_iters: None,
            sdp_iters: 200,
            jl_eps: None,
            c_jl: DEFAULT_C_JL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 0.1) {
            return Err(Error::arg(format!("beta = {} outside (0, 0.1]", self.beta)));
        }
        if !(self.eps > 0.0 && self.eps <= 0.1) {
            return Err(Error::arg(format!("eps = {} outside (0, 0.1]", self.eps)));
        }
        if let Some(j) = self.jl_eps {
            if !(j > 0.0 && j < 1.0) {
                return Err(Error::arg(format!("JL distortion {j} outside (0,1)")));
            }
        }
        if !(self.c_jl > 0.0) {
            return Err(Error::arg("JL constant must be positive"));
        }
        if !(self.c_iter > 0.0) || self.sdp_iters == 0 {
            return Err(Error::arg("iteration budgets must be positive"));
        }
        Ok(())
    }

    pub fn sketch_eps(&self) -> f64 {
        self.jl_eps.unwrap_or(self.eps / 4.0)
    }

    /// ceil(c_iter·ln²n/ε²) for n vertices.
    pub fn iteration_cap(&self, n: usize) -> usize {
        if let Some(m) = self.max_iters {
            return m;
        }
        let l = (n.max(2) as f64).ln();
        (self.c_iter * l * l / (self.eps * self.eps)).ceil() as usize
    }

    /// (δ_u, δ_ℓ) for a given ρ.
    pub fn barrier_steps(&self, rho: f64) -> (f64, f64) {
        let (b, e) = (self.beta, self.eps);
        let half = e * rho / 2.0;
        (half * (1.0 + b + 5.0 * e) / (1.0 - 2.0 * e), half * (1.0 - b - 5.0 * e) / (1.0 + 2.0 * e))
    }
}
