use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bipartite edge set between `n1` row vertices and `n2` column vertices.
///
/// Edges are kept sorted and deduplicated. Vertex ids in Laplacians are `i` for rows and
/// `n1 + j` for columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeList {
    n1: usize,
    n2: usize,
    edges: Vec<(usize, usize)>,
}

impl EdgeList {
    pub fn new(n1: usize, n2: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::arg("bipartite sides must be nonempty"));
        }
        if let Some(&(i, j)) = edges.iter().find(|&&(i, j)| i >= n1 || j >= n2) {
            return Err(Error::arg(format!("edge ({i}, {j}) out of range for {n1}x{n2}")));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { n1, n2, edges })
    }

    /// All n1·n2 pairs.
    pub fn complete(n1: usize, n2: usize) -> Result<Self> {
        let edges = (0..n1).flat_map(|i| (0..n2).map(move |j| (i, j))).collect();
        Self::new(n1, n2, edges)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn n_vertices(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Laplacian endpoints (a, b) of edge `e`, with a < b.
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        let (i, j) = self.edges[e];
        (i, self.n1 + j)
    }

    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i, j)).ok()
    }

    /// `# n1 n2` shape line, then `i,j` rows under an `i,j` header.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# {} {}\ni,j\n", self.n1, self.n2);
        for (i, j) in &self.edges {
            s.push_str(&format!("{i},{j}\n"));
        }
        s
    }

    /// Reads `to_csv` output. Extra columns are ignored, so observation files parse too.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let shape = lines.next().ok_or_else(|| Error::Parse("empty edge file".into()))?;
        let dims: Vec<usize> = shape
            .trim_start_matches('#')
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad shape line: {shape}"))))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(Error::Parse(format!("bad shape line: {shape}")));
        }
        let header = lines.next().unwrap_or_default();
        if !header.trim().starts_with("i,j") {
            return Err(Error::Parse(format!("bad header: {header}")));
        }
        let mut edges = Vec::new();
        for line in lines {
            let mut t = line.split(',').map(str::trim);
            let bad = || Error::Parse(format!("bad edge line: {line}"));
            let i = t.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
            let j = t.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
            edges.push((i, j));
        }
        Self::new(dims[0], dims[1], edges)
    }

    /// True when the graph touches every vertex and has a single component.
    pub fn is_connected(&self) -> bool {
        let labels = component_labels(
            self.n_vertices(),
            (0..self.len()).map(|e| self.endpoints(e)),
        );
        labels.iter().all(|&c| c == 0)
    }
}

pub(crate) fn component_labels(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    // relabel roots in order of first appearance
    let mut label = vec![usize::MAX; n];
    let mut out = vec![0; n];
    let mut next = 0;
    for v in 0..n {
        let r = find(&mut parent, v);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        out[v] = label[r];
    }
    out
}

/// Sparse symmetric graph Laplacian in CSR form.
///
/// The diagonal is stored separately; `row_ptr/cols/vals` hold the (negative) off-diagonal
/// entries. Component labels are computed from the positive-weight edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Laplacian {
    n: usize,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    components: Vec<usize>,
    n_components: usize,
}

impl Laplacian {
    /// Assemble from weighted vertex pairs. Zero weights are dropped, repeated pairs summed.
    pub fn from_weighted_pairs(n: usize, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("Laplacian dimension must be positive"));
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut diag = vec![0.0; n];
        for &(a, b, w) in pairs {
            if a >= n || b >= n {
                return Err(Error::arg(format!("vertex pair ({a}, {b}) out of range {n}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::arg(format!("edge weight {w} must be finite and nonnegative")));
            }
            if w == 0.0 || a == b {
                continue;
            }
            diag[a] += w;
            diag[b] += w;
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in adj.iter_mut() {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut last = usize::MAX;
            for &(c, w) in row.iter() {
                if c == last {
                    *vals.last_mut().unwrap() -= w;
                } else {
                    cols.push(c);
                    vals.push(-w);
                    last = c;
                }
            }
            row_ptr.push(cols.len());
        }
        let components = component_labels(
            n,
            (0..n).flat_map(|a| cols[row_ptr[a]..row_ptr[a + 1]].iter().map(move |&b| (a, b))),
        );
        let n_components = components.iter().max().map_or(0, |m| m + 1);
        Ok(Self { n, diag, row_ptr, cols, vals, components, n_components })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn components(&self) -> &[usize] {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn nnz_offdiag(&self) -> usize {
        self.cols.len()
    }

    /// y = L x
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for a in 0..self.n {
            let mut s = self.diag[a] * x[a];
            for k in self.row_ptr[a]..self.row_ptr[a + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[a] = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        y
    }

    /// xᵀ L x
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Off-diagonal entries as (row, col, value) with row < col.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |a| {
            (self.row_ptr[a]..self.row_ptr[a + 1])
                .filter(move |&k| self.cols[k] > a)
                .map(move |k| (a, self.cols[k], self.vals[k]))
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for a in 0..self.n {
            m[(a, a)] = self.diag[a];
            for k in self.row_ptr[a]..self.row_ptr[a + 1] {
                m[(a, self.cols[k])] = self.vals[k];
            }
        }
        m
    }

    /// Gershgorin bound, ‖L‖ ≤ 2·max degree.
    pub fn norm_bound(&self) -> f64 {
        2.0 * self.diag.iter().cloned().fold(0.0, f64::max)
    }

    /// Remove the per-component mean from `x` in place. Returns the norm of what was removed.
    pub fn project_off_kernel(&self, x: &mut [f64]) -> f64 {
        let mut sums = vec![0.0; self.n_components];
        let mut counts = vec![0usize; self.n_components];
        for (v, &c) in self.components.iter().enumerate() {
            sums[c] += x[v];
            counts[c] += 1;
        }
        let mut removed = 0.0;
        for c in 0..self.n_components {
            removed += sums[c] * sums[c] / counts[c] as f64;
        }
        for (v, &c) in self.components.iter().enumerate() {
            x[v] -= sums[c] / counts[c] as f64;
        }
        removed.sqrt()
    }
}

/// L = Σ w_e b_e b_eᵀ over the bipartite edges.
pub fn build_laplacian(edges: &EdgeList, weights: &[f64]) -> Result<Laplacian> {
    if weights.len() != edges.len() {
        return Err(Error::arg(format!(
            "{} weights for {} edges",
            weights.len(),
            edges.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::arg(format!("negative or NaN edge weight {w}")));
    }
    let pairs: Vec<_> = (0..edges.len())
        .map(|e| {
            let (a, b) = edges.endpoints(e);
            (a, b, weights[e])
        })
        .collect();
    Laplacian::from_weighted_pairs(edges.n_vertices(), &pairs)
}

/// Laplacian of K_{n1,n2}.
pub fn complete_bipartite_laplacian(n1: usize, n2: usize) -> Result<Laplacian> {
    let edges = EdgeList::complete(n1, n2)?;
    build_laplacian(&edges, &vec![1.0; edges.len()])
}

/// ‖D^{-1/2}(Ã − A)D^{-1/2}‖ where D, A come from `l` and Ã from `l_tilde`.
pub fn normalized_adjacency_gap(l: &Laplacian, l_tilde: &Laplacian) -> Result<f64> {
    if l.dim() != l_tilde.dim() {
        return Err(Error::arg("Laplacians differ in dimension"));
    }
    if let Some(v) = l.diag().iter().position(|&d| d <= 0.0) {
        return Err(Error::arg(format!("vertex {v} is isolated")));
    }
    let n = l.dim();
    // Ã − A = (D̃ − L̃) − (D − L), only the off-diagonal part survives
    let mut diff = l.to_dense() - l_tilde.to_dense();
    for v in 0..n {
        diff[(v, v)] = 0.0;
    }
    let s: Vec<f64> = l.diag().iter().map(|d| 1.0 / d.sqrt()).collect();
    for a in 0..n {
        for b in 0..n {
            diff[(a, b)] *= s[a] * s[b];
        }
    }
    let eig = SymmetricEigen::new(diff);
    Ok(eig.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let e = EdgeList::new(3, 2, vec![(2, 1), (0, 0), (1, 1)]).unwrap();
        assert_eq!(EdgeList::from_csv(&e.to_csv()).unwrap(), e);
        let obs = "# 3 2\ni,j,value,provenance\n0,1,1e0,random\n";
        assert_eq!(EdgeList::from_csv(obs).unwrap().edges(), &[(0, 1)]);
    }

    #[test]
    fn single_edge() {
        let e = EdgeList::new(1, 1, vec![(0, 0)]).unwrap();
        let l = build_laplacian(&e, &[1.0]).unwrap();
        assert_eq!(l.to_dense(), DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn k22_structure() {
        let l = complete_bipartite_laplacian(2, 2).unwrap().to_dense();
        for v in 0..4 {
            assert_eq!(l[(v, v)], 2.0);
        }
        for i in 0..2 {
            for j in 2..4 {
                assert_eq!(l[(i, j)], -1.0);
            }
        }
        assert_eq!(l[(0, 1)], 0.0);
        assert_eq!(l[(2, 3)], 0.0);
    }

    #[test]
    fn k23_spectrum() {
        let l = complete_bipartite_laplacian(2, 3).unwrap();
        assert_eq!(l.diag(), &[3.0, 3.0, 2.0, 2.0, 2.0]);
        let mut ev: Vec<f64> = SymmetricEigen::new(l.to_dense()).eigenvalues.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        // K_{a,b}: 0, a (b−1 times), b (a−1 times), a+b
        let want = [0.0, 2.0, 2.0, 3.0, 5.0];
        for (g, w) in ev.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn errors() {
        let e = EdgeList::new(2, 2, vec![(0, 0), (1, 1)]).unwrap();
        assert!(build_laplacian(&e, &[1.0]).is_err());
        assert!(build_laplacian(&e, &[1.0, -1.0]).is_err());
        assert!(complete_bipartite_laplacian(0, 3).is_err());
        assert!(EdgeList::new(2, 2, vec![(2, 0)]).is_err());
    }

    #[test]
    fn dedup_and_components() {
        let e = EdgeList::new(2, 2, vec![(1, 1), (0, 0), (1, 1)]).unwrap();
        assert_eq!(e.len(), 2);
        assert!(!e.is_connected());
        let l = build_laplacian(&e, &[1.0, 1.0]).unwrap();
        assert_eq!(l.n_components(), 2);
        // zero-weight edge does not connect
        let l = build_laplacian(&e, &[1.0, 0.0]).unwrap();
        assert_eq!(l.n_components(), 3);
        assert!(EdgeList::complete(3, 2).unwrap().is_connected());
    }

    #[test]
    fn gap_of_identical_is_zero() {
        let l = complete_bipartite_laplacian(3, 3).unwrap();
        assert_eq!(normalized_adjacency_gap(&l, &l).unwrap(), 0.0);
        let e = EdgeList::new(2, 2, vec![(0, 0)]).unwrap();
        let iso = build_laplacian(&e, &[1.0]).unwrap();
        let other = build_laplacian(&e, &[2.0]).unwrap();
        assert!(normalized_adjacency_gap(&iso, &other).is_err());
    }
}
