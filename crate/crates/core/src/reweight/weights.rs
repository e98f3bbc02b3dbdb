use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{spectral_norm, EdgeList};

/// Sparse nonnegative n1×n2 weights, sorted by (i, j).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    n1: usize,
    n2: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl WeightMatrix {
    pub fn new(n1: usize, n2: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, w) in &entries {
            if i >= n1 || j >= n2 {
                return Err(Error::arg(format!("weight at ({i}, {j}) outside {n1}x{n2}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::arg(format!("weight at ({i}, {j}) is {w}")));
            }
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        if entries.windows(2).any(|p| (p[0].0, p[0].1) == (p[1].0, p[1].1)) {
            return Err(Error::arg("duplicate weight entries"));
        }
        Ok(Self { n1, n2, entries })
    }

    /// One weight per edge of `edges`.
    pub fn from_edges(edges: &EdgeList, w: &[f64]) -> Result<Self> {
        if w.len() != edges.len() {
            return Err(Error::arg(format!("{} weights for {} edges", w.len(), edges.len())));
        }
        let entries = edges.edges().iter().zip(w).map(|(&(i, j), &x)| (i, j, x)).collect();
        Self::new(edges.n1(), edges.n2(), entries)
    }

    /// Nonzero entries of a dense matrix.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::new(m.nrows(), m.ncols(), entries)
    }

    /// Constant weight on every position of `edges`.
    pub fn uniform(edges: &EdgeList, value: f64) -> Result<Self> {
        Self::from_edges(edges, &vec![value; edges.len()])
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(i, j), |&(a, b, _)| (a, b))
            .map_or(0.0, |k| self.entries[k].2)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n1, self.n2);
        for &(i, j, w) in &self.entries {
            m[(i, j)] = w;
        }
        m
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n1];
        for &(i, _, w) in &self.entries {
            s[i] += w;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n2];
        for &(_, j, w) in &self.entries {
            s[j] += w;
        }
        s
    }

    /// ‖W‖_∞
    pub fn max_row_sum(&self) -> f64 {
        self.row_sums().into_iter().fold(0.0, f64::max)
    }

    /// ‖W‖₁
    pub fn max_col_sum(&self) -> f64 {
        self.col_sums().into_iter().fold(0.0, f64::max)
    }

    /// ‖W − J‖₂ by a dense SVD.
    pub fn deviation_norm(&self) -> f64 {
        spectral_norm(&self.to_dense().add_scalar(-1.0))
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# {} {}\ni,j,weight\n", self.n1, self.n2);
        for &(i, j, w) in &self.entries {
            s.push_str(&format!("{i},{j},{w:e}\n"));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let dims = lines.next().and_then(|l| l.strip_prefix('#')).ok_or_else(|| Error::Parse("missing '# n1 n2' line".into()))?;
        let dims: Vec<usize> = dims
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad dimension {t:?}"))))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(Error::Parse("expected two dimensions".into()));
        }
        if lines.next().map(str::trim) != Some("i,j,weight") {
            return Err(Error::Parse("expected header i,j,weight".into()));
        }
        let mut entries = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Parse(format!("line {}: {line:?}", k + 3));
            if f.len() != 3 {
                return Err(bad());
            }
            let i = f[0].trim().parse().map_err(|_| bad())?;
            let j = f[1].trim().parse().map_err(|_| bad())?;
            let w = f[2].trim().parse().map_err(|_| bad())?;
            entries.push((i, j, w));
        }
        Self::new(dims[0], dims[1], entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_csv())?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Measured properties of a weight matrix built from reweighting output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub max_row_sum: f64,
    pub max_col_sum: f64,
    /// ‖W − J‖₂
    pub deviation_norm: f64,
    /// ‖W − J‖₂ / √(n1·n2)
    pub normalized_deviation: f64,
}

/// Places per-edge weights into an n1×n2 matrix and checks ‖W‖_∞ ≤ n2, ‖W‖₁ ≤ n1.
pub fn weights_to_w(edges: &EdgeList, w: &[f64]) -> Result<(WeightMatrix, WeightReport)> {
    let m = WeightMatrix::from_edges(edges, w)?;
    let (n1, n2) = (edges.n1() as f64, edges.n2() as f64);
    let max_row_sum = m.max_row_sum();
    let max_col_sum = m.max_col_sum();
    if max_row_sum > n2 || max_col_sum > n1 {
        return Err(Error::Internal(format!(
            "weight sums exceed degree bounds: row {max_row_sum} > {n2} or column {max_col_sum} > {n1}"
        )));
    }
    let deviation_norm = m.deviation_norm();
    let report = WeightReport {
        max_row_sum,
        max_col_sum,
        deviation_norm,
        normalized_deviation: deviation_norm / (n1 * n2).sqrt(),
    };
    Ok((m, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_is_j() {
        let e = EdgeList::complete(3, 4).unwrap();
        let (w, rep) = weights_to_w(&e, &[1.0; 12]).unwrap();
        assert_eq!(w.to_dense(), DMatrix::from_element(3, 4, 1.0));
        assert!(rep.deviation_norm < 1e-12);
        assert_eq!(rep.max_row_sum, 4.0);
    }

    #[test]
    fn excess_row_sum_is_internal_error() {
        let e = EdgeList::complete(2, 2).unwrap();
        let err = weights_to_w(&e, &[2.0, 0.5, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
    }

    #[test]
    fn csv_round_trip() {
        let w = WeightMatrix::new(3, 2, vec![(2, 1, 0.1), (0, 0, 1.0 / 3.0)]).unwrap();
        assert_eq!(WeightMatrix::from_csv(&w.to_csv()).unwrap(), w);
        assert_eq!(w.get(2, 1), 0.1);
        assert_eq!(w.get(1, 1), 0.0);
    }
}
