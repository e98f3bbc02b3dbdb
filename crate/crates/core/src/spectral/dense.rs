use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};

/// Top-r singular triplets, sorted decreasing. Singular vectors are sign-normalized so the
/// largest-magnitude entry of each left vector is positive.
pub fn top_svd(m: &DMatrix<f64>, r: usize) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    if r == 0 || r > m.nrows().min(m.ncols()) {
        return Err(Error::arg(format!("rank {r} invalid for {}x{}", m.nrows(), m.ncols())));
    }
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.ok_or_else(|| Error::Internal("SVD without U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Internal("SVD without Vᵀ".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut x = DMatrix::zeros(m.nrows(), r);
    let mut y = DMatrix::zeros(m.ncols(), r);
    let mut s = Vec::with_capacity(r);
    for (k, &idx) in order.iter().take(r).enumerate() {
        let mut xc = u.column(idx).into_owned();
        let mut yc = vt.row(idx).transpose();
        let imax = xc.iamax();
        if xc[imax] < 0.0 {
            xc.neg_mut();
            yc.neg_mut();
        }
        x.set_column(k, &xc);
        y.set_column(k, &yc);
        s.push(svd.singular_values[idx]);
    }
    Ok((x, s, y))
}

/// Orthonormal basis of the column space, dropping directions below `1e-12·σ_max`.
fn column_basis(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.ok_or_else(|| Error::Internal("SVD without U".into()))?;
    let cut = 1e-12 * svd.singular_values.max();
    let keep: Vec<_> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > cut).map(|k| u.column(k)).collect();
    Ok(DMatrix::from_columns(&keep))
}

/// Principal angles (radians, ascending) between the column spaces of `a` and `b`.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::arg("subspaces live in different dimensions"));
    }
    let (qa, qb) = (column_basis(a)?, column_basis(b)?);
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return Err(Error::arg("empty subspace"));
    }
    let cos = SVD::new(qa.transpose() * qb, false, false).singular_values;
    let mut angles: Vec<f64> = cos.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false).singular_values.max()
}
