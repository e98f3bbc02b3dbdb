use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::graph::Laplacian;
use super::solve::{dot, norm};
use crate::error::{Error, Result};

/// A symmetric linear map known only through matrix–vector products.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Dense symmetric matrix as an operator.
pub struct DenseOperator<'a>(pub &'a DMatrix<f64>);

impl SymmetricOperator for DenseOperator<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.0;
        y.iter_mut().for_each(|v| *v = 0.0);
        for (c, &xc) in x.iter().enumerate() {
            if xc != 0.0 {
                for (r, yr) in y.iter_mut().enumerate() {
                    *yr += m[(r, c)] * xc;
                }
            }
        }
    }
}

impl SymmetricOperator for Laplacian {
    fn dim(&self) -> usize {
        Laplacian::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        Laplacian::apply(self, x, y)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EigenBackend {
    /// Materialize the operator and run a full symmetric eigendecomposition.
    #[default]
    Dense,
    /// Lanczos with full reorthogonalization.
    Lanczos,
}

/// (λ_min, λ_max) of a symmetric operator, within relative tolerance `tol`.
pub fn extreme_eigs(op: &dyn SymmetricOperator, tol: f64, backend: EigenBackend) -> Result<(f64, f64)> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::arg("operator has dimension 0"));
    }
    if !(tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    match backend {
        EigenBackend::Dense => dense(op),
        EigenBackend::Lanczos => lanczos(op, tol),
    }
}

fn dense(op: &dyn SymmetricOperator) -> Result<(f64, f64)> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for c in 0..n {
        e[c] = 1.0;
        op.apply(&e, &mut col);
        e[c] = 0.0;
        m.column_mut(c).copy_from_slice(&col);
    }
    let asym = (&m - m.transpose()).abs().max();
    if asym > 1e-8 * m.abs().max().max(1.0) {
        return Err(Error::arg(format!("operator is not symmetric (defect {asym:e})")));
    }
    let m = (&m + m.transpose()) * 0.5;
    let ev = SymmetricEigen::new(m).eigenvalues;
    Ok((ev.min(), ev.max()))
}

fn lanczos(op: &dyn SymmetricOperator, tol: f64) -> Result<(f64, f64)> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut q = fresh_vector(n, &basis, &mut rng)
        .ok_or_else(|| Error::solver("could not draw a start vector", f64::NAN))?;
    let mut w = vec![0.0; n];
    let mut scale = 0.0_f64;
    loop {
        op.apply(&q, &mut w);
        let a = dot(&q, &w);
        basis.push(q.clone());
        alpha.push(a);
        // two passes of classical Gram–Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let b = norm(&w);
        let k = alpha.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (imin, imax) = argminmax(eig.eigenvalues.as_slice());
        let (lo, hi) = (eig.eigenvalues[imin], eig.eigenvalues[imax]);
        scale = scale.max(lo.abs()).max(hi.abs());
        if k == n {
            return Ok((lo, hi));
        }
        let res_lo = (b * eig.eigenvectors[(k - 1, imin)]).abs();
        let res_hi = (b * eig.eigenvectors[(k - 1, imax)]).abs();
        let thresh = tol * scale.max(f64::MIN_POSITIVE);
        if k >= 2 && res_lo <= thresh && res_hi <= thresh && b > 1e-10 * scale {
            return Ok((lo, hi));
        }
        if b <= 1e-10 * scale.max(1e-300) {
            // invariant subspace: restart in its orthogonal complement
            q = fresh_vector(n, &basis, &mut rng).ok_or_else(|| {
                Error::solver("Lanczos breakdown with no complement left", b)
            })?;
            beta.push(0.0);
        } else {
            q = w.iter().map(|v| v / b).collect();
            beta.push(b);
        }
    }
}

fn fresh_vector(n: usize, basis: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    for _ in 0..4 {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let start = norm(&v);
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 * start {
            return Some(v.into_iter().map(|x| x / nv).collect());
        }
    }
    None
}

fn argminmax(v: &[f64]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[lo] {
            lo = i;
        }
        if x > v[hi] {
            hi = i;
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_both_backends() {
        let m = DMatrix::<f64>::identity(5, 5);
        for b in [EigenBackend::Dense, EigenBackend::Lanczos] {
            let (lo, hi) = extreme_eigs(&DenseOperator(&m), 1e-10, b).unwrap();
            assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12, "{b:?}");
        }
    }

    #[test]
    fn diagonal_pair() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.1, 0.9]));
        for b in [EigenBackend::Dense, EigenBackend::Lanczos] {
            let (lo, hi) = extreme_eigs(&DenseOperator(&m), 1e-10, b).unwrap();
            assert!((lo - 0.1).abs() < 1e-12 && (hi - 0.9).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_asymmetric_dense() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(extreme_eigs(&DenseOperator(&m), 1e-8, EigenBackend::Dense).is_err());
    }
}
