use super::graph::Laplacian;
use crate::error::{Error, Result};

/// Iteration count and final residual of a CG solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solve L x = b with Jacobi-preconditioned CG.
///
/// `b` must be orthogonal to the kernel (per-component constants). A kernel part of size at
/// most `tol·‖b‖` is projected away; if instead the range part is that small, `b` is treated
/// as a kernel vector and the Moore–Penrose answer 0 is returned. Anything else is rejected.
/// The residual is measured against the projected right-hand side.
pub fn solve_spd(l: &Laplacian, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    check(l, b, tol)?;
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let mut bp = b.to_vec();
    let kernel = l.project_off_kernel(&mut bp);
    if norm(&bp) <= tol * bn {
        return Ok(vec![0.0; b.len()]);
    }
    if kernel > tol * bn {
        return Err(Error::arg(format!(
            "right-hand side has kernel component {kernel:e} > tol·‖b‖ = {:e}",
            tol * bn
        )));
    }
    pcg(l, &bp, tol).map(|(x, _)| x)
}

/// Apply the pseudo-inverse: project `b` off the kernel, then solve. Used internally where
/// the caller wants L⁺b for arbitrary b.
pub fn solve_pseudo(l: &Laplacian, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    check(l, b, tol)?;
    let mut bp = b.to_vec();
    l.project_off_kernel(&mut bp);
    if norm(&bp) == 0.0 {
        return Ok((vec![0.0; b.len()], SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    pcg(l, &bp, tol)
}

fn check(l: &Laplacian, b: &[f64], tol: f64) -> Result<()> {
    if b.len() != l.dim() {
        return Err(Error::arg(format!("rhs length {} vs dimension {}", b.len(), l.dim())));
    }
    if !(tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("rhs has non-finite entries"));
    }
    Ok(())
}

fn pcg(l: &Laplacian, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    let n = b.len();
    let bn = norm(b);
    let inv_diag: Vec<f64> = l.diag().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let cap = 10 * n.max(1);
    // aim a bit below tol so the recomputed residual still passes
    let target = 0.5 * tol * bn;
    let mut it = 0;
    while it < cap {
        if norm(&r) <= target {
            break;
        }
        l.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
        it += 1;
    }
    l.project_off_kernel(&mut x);
    let lx = l.mul_vec(&x);
    let res = lx.iter().zip(b).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt() / bn;
    if !(res <= tol) {
        return Err(Error::solver(format!("CG stopped after {it} iterations"), res));
    }
    Ok((x, SolveStats { iterations: it, relative_residual: res }))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_laplacian, complete_bipartite_laplacian, EdgeList};

    #[test]
    fn k11() {
        let l = complete_bipartite_laplacian(1, 1).unwrap();
        let x = solve_spd(&l, &[1.0, -1.0], 1e-12).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn kernel_rhs_gives_zero() {
        let e = EdgeList::new(2, 2, vec![(0, 0), (1, 1)]).unwrap();
        let l = build_laplacian(&e, &[1.0, 2.0]).unwrap();
        // constant on each component
        let x = solve_spd(&l, &[3.0, -1.0, 3.0, -1.0], 1e-10).unwrap();
        assert_eq!(x, vec![0.0; 4]);
    }

    #[test]
    fn large_kernel_part_rejected() {
        let l = complete_bipartite_laplacian(2, 2).unwrap();
        let err = solve_spd(&l, &[2.0, 0.0, 0.0, 0.0], 1e-8).unwrap_err();
        assert!(err.is_argument());
        // but the pseudo-inverse path accepts it
        let (x, _) = solve_pseudo(&l, &[2.0, 0.0, 0.0, 0.0], 1e-10).unwrap();
        let lx = l.mul_vec(&x);
        let want = [1.5, -0.5, -0.5, -0.5];
        for (a, b) in lx.iter().zip(want) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn small_kernel_part_projected() {
        let l = complete_bipartite_laplacian(2, 2).unwrap();
        let b = [1.0 + 1e-12, -1.0, 0.5, -0.5];
        assert!(solve_spd(&l, &b, 1e-8).is_ok());
    }
}
