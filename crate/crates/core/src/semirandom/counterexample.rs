use nalgebra::DMatrix;

use super::ground_truth::GroundTruth;
use crate::error::{Error, Result};

/// γ = (1+β²)/(1−β²)
pub fn rank1_gamma(beta: f64) -> f64 {
    (1.0 + beta * beta) / (1.0 - beta * beta)
}

/// Symmetric rank-one instance with M* = J whose weighted objective has a spurious local
/// minimum at `u = (β·1; −β·1)`.
#[derive(Clone, Debug)]
pub struct Rank1Counterexample {
    pub gt: GroundTruth,
    pub w: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub beta: f64,
    pub gamma: f64,
}

impl Rank1Counterexample {
    /// 2β²(γ−1) − (γ+1); positive means the Hessian at `u` is positive definite.
    pub fn certificate(&self) -> f64 {
        2.0 * self.beta * self.beta * (self.gamma - 1.0) - (self.gamma + 1.0)
    }
}

pub fn counterexample_rank1(n: usize, beta: f64) -> Result<Rank1Counterexample> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::arg(format!("n = {n} must be a positive even number")));
    }
    let lo = 2f64.powf(-0.25);
    if !(beta > lo && beta <= 0.9) {
        return Err(Error::arg(format!("beta = {beta} outside (2^(-1/4), 0.9]")));
    }
    let gamma = rank1_gamma(beta);
    let h = n / 2;
    let w = expand_blocks(&DMatrix::from_row_slice(2, 2, &[gamma, 1.0, 1.0, gamma]), h)?;
    let u = DMatrix::from_fn(n, 1, |i, _| if i < h { beta } else { -beta });
    let ones = DMatrix::from_element(n, 1, 1.0 / (n as f64).sqrt());
    let gt = GroundTruth::from_svd(&ones, &ones, &[n as f64])?;
    Ok(Rank1Counterexample { gt, w, u, beta, gamma })
}

/// Rank-two instance where the top-2 singular subspace of W∗M* misses span(M*).
#[derive(Clone, Debug)]
pub struct Rank2Counterexample {
    pub gt: GroundTruth,
    pub m_star: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

impl Rank2Counterexample {
    pub fn weighted(&self) -> DMatrix<f64> {
        self.w.component_mul(&self.m_star)
    }
}

pub fn counterexample_rank2(n: usize) -> Result<Rank2Counterexample> {
    if n < 4 || !n.is_multiple_of(4) {
        return Err(Error::arg(format!("n = {n} must be a positive multiple of 4")));
    }
    let b = n / 4;
    let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0]);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
    let m_rep = &x * d * x.transpose();
    #[rustfmt::skip]
    let w_rep = DMatrix::from_row_slice(4, 4, &[
        2.0, 1.0, 2.0, 1.0,
        1.0, 2.0, 1.0, 2.0,
        2.0, 1.0, 2.0, 1.0,
        1.0, 2.0, 1.0, 2.0,
    ]);
    let m_star = expand_blocks(&m_rep, b)?;
    let w = expand_blocks(&w_rep, b)?;
    // exact singular pairs: the two columns of X expanded and normalized; σ = (4n, n)
    let nf = n as f64;
    let col = |k: usize| DMatrix::from_fn(n, 1, |i, _| x[(i / b, k)] / nf.sqrt());
    let basis = DMatrix::from_columns(&[col(0).column(0), col(1).column(0)]);
    let gt = GroundTruth::from_svd(&basis, &basis, &[4.0 * nf, nf])?;
    Ok(Rank2Counterexample { gt, m_star, w })
}

/// Replace every entry of `rep` with a b×b constant block.
pub fn expand_blocks(rep: &DMatrix<f64>, b: usize) -> Result<DMatrix<f64>> {
    if b == 0 {
        return Err(Error::arg("block size must be positive"));
    }
    Ok(DMatrix::from_fn(rep.nrows() * b, rep.ncols() * b, |i, j| rep[(i / b, j / b)]))
}

/// Collapse a block-constant matrix to its representative. Fails unless every block is
/// exactly constant.
pub fn block_representative(m: &DMatrix<f64>, b: usize) -> Result<DMatrix<f64>> {
    if b == 0 || !m.nrows().is_multiple_of(b) || !m.ncols().is_multiple_of(b) {
        return Err(Error::arg("block size does not divide the matrix"));
    }
    let rep = DMatrix::from_fn(m.nrows() / b, m.ncols() / b, |i, j| m[(i * b, j * b)]);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)].to_bits() != rep[(i / b, j / b)].to_bits() {
                return Err(Error::arg(format!("entry ({i}, {j}) breaks block structure")));
            }
        }
    }
    Ok(rep)
}
