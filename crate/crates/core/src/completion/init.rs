use log::warn;

use super::objective::{Factorization, WeightedEntries};
use crate::error::{Error, Result};
use crate::spectral::top_svd;

/// Top-r SVD of the weighted observed matrix W∗M, split as U = XD^{1/2}, V = YD^{1/2}.
/// If fewer than r singular values are numerically nonzero the achievable rank is returned.
pub fn svd_initialize(data: &WeightedEntries, r: usize) -> Result<Factorization> {
    if data.is_empty() {
        return Err(Error::arg("no observations to initialize from"));
    }
    let m = data.weighted_dense();
    let (x, s, y) = top_svd(&m, r)?;
    let keep = s.iter().take_while(|v| **v > 1e-12 * s[0]).count();
    if keep < r {
        warn!("weighted observed matrix has rank {keep} < {r}; returning rank {keep}");
    }
    if keep == 0 {
        return Err(Error::arg("weighted observed matrix is zero"));
    }
    let mut u = x.columns(0, keep).into_owned();
    let mut v = y.columns(0, keep).into_owned();
    for k in 0..keep {
        let h = s[k].sqrt();
        u.column_mut(k).scale_mut(h);
        v.column_mut(k).scale_mut(h);
    }
    Factorization::new(u, v)
}
