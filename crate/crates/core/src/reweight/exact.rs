use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::problem::{weighted_gram, BarrierProblem};
use super::sdp::{OracleEval, PackingOracle};
use crate::error::{Error, Result};

/// Largest barrier-distance reciprocal allowed before exp overflows.
const MAX_INV_GAP: f64 = 700.0;

/// Eigendecomposition of A = Σ w_e v_e v_eᵀ at fixed barriers.
#[derive(Clone, Debug)]
pub(crate) struct ExactSnapshot {
    pub eigvals: DVector<f64>,
    /// Qᵀv_e for every edge (d×m).
    proj: DMatrix<f64>,
    pub u: f64,
    pub l: f64,
}

impl ExactSnapshot {
    pub fn new(problem: &BarrierProblem, w: &[f64], u: f64, l: f64) -> Result<Self> {
        let a = problem.operator(w);
        let eig = SymmetricEigen::new(a);
        let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
        if !(lo > l && hi < u) || 1.0 / (u - hi) > MAX_INV_GAP || 1.0 / (lo - l) > MAX_INV_GAP {
            return Err(Error::State(format!("barriers violated: spectrum [{lo}, {hi}] vs ({l}, {u})")));
        }
        let proj = eig.eigenvectors.transpose() * problem.vectors();
        Ok(Self { eigvals: eig.eigenvalues, proj, u, l })
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigvals.min()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigvals.max()
    }

    /// (λ_min{uI − A, A − ℓI})²
    pub fn rho(&self) -> f64 {
        (self.u - self.lambda_max()).min(self.lambda_min() - self.l).powi(2)
    }

    pub fn potential(&self) -> f64 {
        self.eigvals.iter().map(|&x| (1.0 / (self.u - x)).exp() + (1.0 / (x - self.l)).exp()).sum()
    }

    fn weights_plus(&self) -> Vec<f64> {
        self.eigvals.iter().map(|&x| c_plus(x, self.l)).collect()
    }

    fn weights_minus(&self) -> Vec<f64> {
        self.eigvals.iter().map(|&x| c_minus(x, self.u)).collect()
    }

    /// (tr C₊, tr C₋)
    pub fn traces(&self) -> (f64, f64) {
        (self.weights_plus().iter().sum(), self.weights_minus().iter().sum())
    }

    /// (c⁺_e, c⁻_e) = (v_eᵀC₊v_e, v_eᵀC₋v_e)
    pub fn scores(&self) -> (Vec<f64>, Vec<f64>) {
        let (fp, fm) = (self.weights_plus(), self.weights_minus());
        let m = self.proj.ncols();
        let mut cp = vec![0.0; m];
        let mut cm = vec![0.0; m];
        for e in 0..m {
            let col = self.proj.column(e);
            for (k, p) in col.iter().enumerate() {
                let q = p * p;
                cp[e] += fp[k] * q;
                cm[e] += fm[k] * q;
            }
        }
        (cp, cm)
    }
}

/// exp(1/(x−ℓ))/(x−ℓ)²
pub(crate) fn c_plus(x: f64, l: f64) -> f64 {
    let g = x - l;
    (1.0 / g).exp() / (g * g)
}

/// exp(1/(u−x))/(u−x)²
pub(crate) fn c_minus(x: f64, u: f64) -> f64 {
    let g = u - x;
    (1.0 / g).exp() / (g * g)
}

/// Dense packing oracle over the columns of V restricted to the active edges.
pub(crate) struct ExactOracle {
    vecs: DMatrix<f64>,
}

impl ExactOracle {
    pub fn new(problem: &BarrierProblem, active: &[usize]) -> Self {
        let v = problem.vectors();
        Self { vecs: DMatrix::from_fn(v.nrows(), active.len(), |k, c| v[(k, active[c])]) }
    }
}

impl PackingOracle for ExactOracle {
    fn len(&self) -> usize {
        self.vecs.ncols()
    }

    fn eval(&self, x: &[f64], eta: f64) -> Result<OracleEval> {
        let eig = SymmetricEigen::new(weighted_gram(&self.vecs, x));
        let top = eig.eigenvalues.max();
        if !(top > 0.0) {
            return Err(Error::Internal("packing iterate has zero operator".into()));
        }
        let mut p: Vec<f64> = eig.eigenvalues.iter().map(|&m| (eta * (m - top)).exp()).collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= z);
        let g = eig.eigenvectors.transpose() * &self.vecs;
        let dens = (0..g.ncols())
            .map(|e| g.column(e).iter().zip(&p).map(|(a, pk)| pk * a * a).sum())
            .collect();
        Ok(OracleEval { lambda_max: top, log_partition: z.ln(), densities: dens })
    }
}

/// Slack of the four first-order potential bounds at (A, Δ), each rhs − lhs:
/// Φ_u(A+Δ) ≤ Φ_u(A) + (1+2ε)C₋•Δ, Φ_ℓ(A+Δ) ≤ Φ_ℓ(A) − (1−2ε)C₊•Δ,
/// Φ_u(A−Δ) ≤ Φ_u(A) − (1−2ε)C₋•Δ, Φ_ℓ(A−Δ) ≤ Φ_ℓ(A) + (1+2ε)C₊•Δ.
/// Requires ℓI ≺ A ≺ uI and the shifted matrices to stay inside the barriers.
pub fn first_order_slack(a: &DMatrix<f64>, u: f64, l: f64, delta: &DMatrix<f64>, eps: f64) -> Result<[f64; 4]> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let phi_u = |m: &DMatrix<f64>| -> Result<f64> { trace_fn(&(&id * u - m), |g| (1.0 / g).exp()) };
    let phi_l = |m: &DMatrix<f64>| -> Result<f64> { trace_fn(&(m - &id * l), |g| (1.0 / g).exp()) };
    let cm = mat_fn(&(&id * u - a), |g| (1.0 / g).exp() / (g * g))?;
    let cp = mat_fn(&(a - &id * l), |g| (1.0 / g).exp() / (g * g))?;
    let cmd = cm.dot(delta);
    let cpd = cp.dot(delta);
    let (pu, pl) = (phi_u(a)?, phi_l(a)?);
    let plus = a + delta;
    let minus = a - delta;
    Ok([
        pu + (1.0 + 2.0 * eps) * cmd - phi_u(&plus)?,
        pl - (1.0 - 2.0 * eps) * cpd - phi_l(&plus)?,
        pu - (1.0 - 2.0 * eps) * cmd - phi_u(&minus)?,
        pl + (1.0 + 2.0 * eps) * cpd - phi_l(&minus)?,
    ])
}

fn trace_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<f64> {
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.min() <= 0.0 {
        return Err(Error::State("matrix outside the barrier".into()));
    }
    Ok(eig.eigenvalues.iter().map(|&g| f(g)).sum())
}

fn mat_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.min() <= 0.0 {
        return Err(Error::State("matrix outside the barrier".into()));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::EdgeList;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(n1: usize, n2: usize) -> BarrierProblem {
        BarrierProblem::new(EdgeList::complete(n1, n2).unwrap()).unwrap()
    }

    #[test]
    fn initial_state() {
        let p = problem(3, 4);
        let s = ExactSnapshot::new(&p, &[0.0; 12], 0.25, -0.25).unwrap();
        assert!((s.rho() - 1.0 / 16.0).abs() < 1e-15);
        let d = p.dim() as f64;
        assert!((s.potential() - 2.0 * d * 4f64.exp()).abs() < 1e-9);
        let (cp, cm) = s.scores();
        let expect = 16.0 * 4f64.exp() * p.atom_traces()[0];
        for (a, b) in cp.iter().zip(&cm) {
            assert!((a - b).abs() < 1e-9 * expect);
            assert!((a - expect).abs() < 1e-9 * expect);
        }
    }

    #[test]
    fn barrier_violation_is_state_error() {
        let p = problem(2, 2);
        let err = ExactSnapshot::new(&p, &[1.0; 4], 0.25, -0.25).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn single_atom_densities() {
        let p = problem(1, 1);
        let o = ExactOracle::new(&p, &[0]);
        let e = o.eval(&[2.0], 3.0).unwrap();
        // d = 1, ‖v‖² = 1, Ψ = 2
        assert!((e.lambda_max - 2.0).abs() < 1e-12);
        assert!(e.log_partition.abs() < 1e-12);
        assert!((e.densities[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_order_bounds_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 6;
        let eps = 0.05;
        for _ in 0..20 {
            let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
            let a = (&g * g.transpose()) * 0.1;
            let eig = SymmetricEigen::new(a.clone());
            let (u, l) = (eig.eigenvalues.max() + 0.3, eig.eigenvalues.min() - 0.2);
            let rho = (u - eig.eigenvalues.max()).min(eig.eigenvalues.min() - l).powi(2);
            let h = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>());
            let mut delta = &h * h.transpose();
            let top = SymmetricEigen::new(delta.clone()).eigenvalues.max();
            delta *= eps * rho / top;
            for s in first_order_slack(&a, u, l, &delta, eps).unwrap() {
                assert!(s >= -1e-9, "slack {s}");
            }
        }
    }
}
