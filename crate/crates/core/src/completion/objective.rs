use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::regularizer::{RegularizerParams, RowPenalty};
use crate::error::{Error, Result};
use crate::reweight::WeightMatrix;
use crate::semirandom::ObservationSet;

/// Current iterate (U, V).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl Factorization {
    pub fn new(u: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(Error::arg(format!("factor ranks differ: {} vs {}", u.ncols(), v.ncols())));
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::arg("factor entries must be finite"));
        }
        Ok(Self { u, v })
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn product(&self) -> DMatrix<f64> {
        &self.u * self.v.transpose()
    }

    /// Z = (U; V)
    pub fn stacked(&self) -> DMatrix<f64> {
        let (n1, n2, r) = (self.u.nrows(), self.v.nrows(), self.rank());
        let mut z = DMatrix::zeros(n1 + n2, r);
        z.rows_mut(0, n1).copy_from(&self.u);
        z.rows_mut(n1, n2).copy_from(&self.v);
        z
    }

    pub fn from_stacked(z: &DMatrix<f64>, n1: usize) -> Self {
        let n2 = z.nrows() - n1;
        Self { u: z.rows(0, n1).into_owned(), v: z.rows(n1, n2).into_owned() }
    }
}

/// Observed entries joined with their weights: (i, j, M*_ij, W_ij).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEntries {
    pub n1: usize,
    pub n2: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedEntries {
    /// Every positive weight must sit on an observed entry. Observed entries without a
    /// weight get weight 0 and are dropped.
    pub fn new(obs: &ObservationSet, w: &WeightMatrix) -> Result<Self> {
        if obs.n1() != w.n1() || obs.n2() != w.n2() {
            return Err(Error::arg("observations and weights differ in shape"));
        }
        let mut out = Self::empty(obs.n1(), obs.n2());
        for &(i, j, wij) in w.entries() {
            if wij == 0.0 {
                continue;
            }
            let o = obs
                .find(i, j)
                .ok_or_else(|| Error::arg(format!("weight on unobserved entry ({i}, {j})")))?;
            out.push(i, j, o.value, wij);
        }
        Ok(out)
    }

    /// Observed entries with W = (1/p)·indicator, the unweighted objective.
    pub fn unweighted(obs: &ObservationSet, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::arg(format!("probability {p} outside (0,1]")));
        }
        let mut out = Self::empty(obs.n1(), obs.n2());
        for o in obs.entries() {
            out.push(o.i, o.j, o.value, 1.0 / p);
        }
        Ok(out)
    }

    /// Fully observed matrix with a dense weight matrix (zeros skipped).
    pub fn from_dense(m: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<Self> {
        if m.shape() != w.shape() {
            return Err(Error::arg("matrix and weights differ in shape"));
        }
        let mut out = Self::empty(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if w[(i, j)] != 0.0 {
                    out.push(i, j, m[(i, j)], w[(i, j)]);
                }
            }
        }
        Ok(out)
    }

    fn empty(n1: usize, n2: usize) -> Self {
        Self { n1, n2, rows: vec![], cols: vec![], values: vec![], weights: vec![] }
    }

    fn push(&mut self, i: usize, j: usize, v: f64, w: f64) {
        self.rows.push(i);
        self.cols.push(j);
        self.values.push(v);
        self.weights.push(w);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// W∗M as a dense matrix.
    pub fn weighted_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n1, self.n2);
        for e in 0..self.len() {
            m[(self.rows[e], self.cols[e])] = self.weights[e] * self.values[e];
        }
        m
    }

    pub fn weight_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n1, self.n2);
        for e in 0..self.len() {
            m[(self.rows[e], self.cols[e])] = self.weights[e];
        }
        m
    }
}

/// A twice-differentiable objective over a stacked factor matrix Z.
pub trait SmoothObjective {
    /// Shape of Z.
    fn shape(&self) -> (usize, usize);
    fn value(&self, z: &DMatrix<f64>) -> f64;
    fn gradient(&self, z: &DMatrix<f64>) -> DMatrix<f64>;
    /// d²/dt² f(Z + tD) at t = 0.
    fn hessian_form(&self, z: &DMatrix<f64>, d: &DMatrix<f64>) -> f64;
    /// ∇²f(Z)[D] as a matrix.
    fn hessian_vec(&self, z: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64>;

    /// Dense Hessian in column-major vec(Z) coordinates.
    fn hessian_matrix(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, r) = self.shape();
        let dim = n * r;
        let mut h = DMatrix::zeros(dim, dim);
        let mut e = DMatrix::zeros(n, r);
        for c in 0..dim {
            e[c] = 1.0;
            let col = self.hessian_vec(z, &e);
            h.column_mut(c).copy_from_slice(col.as_slice());
            e[c] = 0.0;
        }
        (&h + h.transpose()) * 0.5
    }
}

fn row_dot(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    (0..a.ncols()).map(|k| a[(i, k)] * b[(j, k)]).sum()
}

/// f(U,V) = 2‖UVᵀ − M*‖²_W + ½‖UᵀU − VᵀV‖²_F + Q(U,V), over Z = (U; V).
#[derive(Clone, Debug)]
pub struct AsymmetricObjective {
    pub data: WeightedEntries,
    pub rank: usize,
    pub reg: Option<RegularizerParams>,
}

impl AsymmetricObjective {
    pub fn new(data: WeightedEntries, rank: usize, reg: Option<RegularizerParams>) -> Self {
        Self { data, rank, reg }
    }

    fn split<'a>(&self, z: &'a DMatrix<f64>) -> (nalgebra::DMatrixView<'a, f64>, nalgebra::DMatrixView<'a, f64>) {
        (z.rows(0, self.data.n1), z.rows(self.data.n1, self.data.n2))
    }

    fn penalties(&self) -> Option<(RowPenalty, RowPenalty)> {
        self.reg.map(|p| {
            (RowPenalty { alpha: p.alpha1, lambda: p.lambda1 }, RowPenalty { alpha: p.alpha2, lambda: p.lambda2 })
        })
    }

    fn residuals(&self, z: &DMatrix<f64>) -> Vec<f64> {
        let n1 = self.data.n1;
        (0..self.data.len())
            .map(|e| row_dot(z, self.data.rows[e], z, n1 + self.data.cols[e]) - self.data.values[e])
            .collect()
    }

    fn balance(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let (u, v) = self.split(z);
        u.transpose() * u - v.transpose() * v
    }

    fn blocks(&self, z: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let (u, v) = self.split(z);
        (u.into_owned(), v.into_owned())
    }
}

impl SmoothObjective for AsymmetricObjective {
    fn shape(&self) -> (usize, usize) {
        (self.data.n1 + self.data.n2, self.rank)
    }

    fn value(&self, z: &DMatrix<f64>) -> f64 {
        let res = self.residuals(z);
        let fit: f64 = res.iter().zip(&self.data.weights).map(|(r, w)| w * r * r).sum();
        let mut f = 2.0 * fit + 0.5 * self.balance(z).norm_squared();
        if let Some((q1, q2)) = self.penalties() {
            let (u, v) = self.blocks(z);
            f += q1.value(&u) + q2.value(&v);
        }
        f
    }

    fn gradient(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let n1 = self.data.n1;
        let r = self.rank;
        let res = self.residuals(z);
        let mut g = DMatrix::zeros(z.nrows(), r);
        for e in 0..self.data.len() {
            let (i, j) = (self.data.rows[e], n1 + self.data.cols[e]);
            let c = 4.0 * self.data.weights[e] * res[e];
            for k in 0..r {
                g[(i, k)] += c * z[(j, k)];
                g[(j, k)] += c * z[(i, k)];
            }
        }
        let s = self.balance(z);
        let (u, v) = self.blocks(z);
        let mut gu = &u * &s * 2.0;
        let mut gv = &v * &s * -2.0;
        if let Some((q1, q2)) = self.penalties() {
            q1.add_gradient(&u, &mut gu);
            q2.add_gradient(&v, &mut gv);
        }
        let mut rows_u = g.rows_mut(0, n1);
        rows_u += gu;
        let mut rows_v = g.rows_mut(n1, self.data.n2);
        rows_v += gv;
        g
    }

    fn hessian_form(&self, z: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
        let n1 = self.data.n1;
        let res = self.residuals(z);
        let mut fit = 0.0;
        for e in 0..self.data.len() {
            let (i, j) = (self.data.rows[e], n1 + self.data.cols[e]);
            let first = row_dot(d, i, z, j) + row_dot(z, i, d, j);
            let second = row_dot(d, i, d, j);
            fit += self.data.weights[e] * (first * first + 2.0 * res[e] * second);
        }
        let (u, v) = self.blocks(z);
        let (du, dv) = self.blocks(d);
        let s = &u.transpose() * &u - v.transpose() * &v;
        let s1 = du.transpose() * &u + u.transpose() * &du - dv.transpose() * &v - v.transpose() * &dv;
        let s2 = du.transpose() * &du - dv.transpose() * &dv;
        let mut h = 4.0 * fit + s1.norm_squared() + 2.0 * s.dot(&s2);
        if let Some((q1, q2)) = self.penalties() {
            h += q1.hessian_form(&u, &du) + q2.hessian_form(&v, &dv);
        }
        h
    }

    fn hessian_vec(&self, z: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
        let n1 = self.data.n1;
        let r = self.rank;
        let res = self.residuals(z);
        let mut h = DMatrix::zeros(z.nrows(), r);
        for e in 0..self.data.len() {
            let (i, j) = (self.data.rows[e], n1 + self.data.cols[e]);
            let w4 = 4.0 * self.data.weights[e];
            let dr = row_dot(d, i, z, j) + row_dot(z, i, d, j);
            for k in 0..r {
                h[(i, k)] += w4 * (dr * z[(j, k)] + res[e] * d[(j, k)]);
                h[(j, k)] += w4 * (dr * z[(i, k)] + res[e] * d[(i, k)]);
            }
        }
        let (u, v) = self.blocks(z);
        let (du, dv) = self.blocks(d);
        let s = &u.transpose() * &u - v.transpose() * &v;
        let s1 = du.transpose() * &u + u.transpose() * &du - dv.transpose() * &v - v.transpose() * &dv;
        let mut hu = (&du * &s + &u * &s1) * 2.0;
        let mut hv = (&dv * &s + &v * &s1) * -2.0;
        if let Some((q1, q2)) = self.penalties() {
            q1.add_hessian_vec(&u, &du, &mut hu);
            q2.add_hessian_vec(&v, &dv, &mut hv);
        }
        let mut rows_u = h.rows_mut(0, n1);
        rows_u += hu;
        let mut rows_v = h.rows_mut(n1, self.data.n2);
        rows_v += hv;
        h
    }
}

/// f(U) = ½‖UUᵀ − M*‖²_W + Q(U) for square symmetric problems.
#[derive(Clone, Debug)]
pub struct SymmetricObjective {
    pub data: WeightedEntries,
    pub rank: usize,
    pub reg: Option<RegularizerParams>,
}

impl SymmetricObjective {
    pub fn new(data: WeightedEntries, rank: usize, reg: Option<RegularizerParams>) -> Result<Self> {
        if data.n1 != data.n2 {
            return Err(Error::arg("symmetric objective needs a square problem"));
        }
        Ok(Self { data, rank, reg })
    }

    fn penalty(&self) -> Option<RowPenalty> {
        self.reg.map(|p| RowPenalty { alpha: p.alpha1, lambda: p.lambda1 })
    }

    fn residuals(&self, z: &DMatrix<f64>) -> Vec<f64> {
        (0..self.data.len())
            .map(|e| row_dot(z, self.data.rows[e], z, self.data.cols[e]) - self.data.values[e])
            .collect()
    }
}

impl SmoothObjective for SymmetricObjective {
    fn shape(&self) -> (usize, usize) {
        (self.data.n1, self.rank)
    }

    fn value(&self, z: &DMatrix<f64>) -> f64 {
        let res = self.residuals(z);
        let fit: f64 = res.iter().zip(&self.data.weights).map(|(r, w)| w * r * r).sum();
        0.5 * fit + self.penalty().map_or(0.0, |q| q.value(z))
    }

    fn gradient(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let r = self.rank;
        let res = self.residuals(z);
        let mut g = DMatrix::zeros(z.nrows(), r);
        for e in 0..self.data.len() {
            let (i, j) = (self.data.rows[e], self.data.cols[e]);
            let c = self.data.weights[e] * res[e];
            for k in 0..r {
                g[(i, k)] += c * z[(j, k)];
                g[(j, k)] += c * z[(i, k)];
            }
        }
        if let Some(q) = self.penalty() {
            q.add_gradient(z, &mut g);
        }
        g
    }

    fn hessian_form(&self, z: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
        let res = self.residuals(z);
        let mut h = 0.0;
        for e in 0..self.data.len() {
            let (i, j) = (self.data.rows[e], self.data.cols[e]);
            let first = row_dot(d, i, z, j) + row_dot(z, i, d, j);
            h += self.data.weights[e] * (first * first + 2.0 * res[e] * row_dot(d, i, d, j));
        }
        h + self.penalty().map_or(0.0, |q| q.hessian_form(z, d))
    }

    fn hessian_vec(&self, z: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
        let r = self.rank;
        let res = self.residuals(z);
        let mut h = DMatrix::zeros(z.nrows(), r);
        for e in 0..self.data.len() {
            let (i, j) = (self.data.rows[e], self.data.cols[e]);
            let w = self.data.weights[e];
            let dr = row_dot(d, i, z, j) + row_dot(z, i, d, j);
            for k in 0..r {
                h[(i, k)] += w * (dr * z[(j, k)] + res[e] * d[(j, k)]);
                h[(j, k)] += w * (dr * z[(i, k)] + res[e] * d[(i, k)]);
            }
        }
        if let Some(q) = self.penalty() {
            q.add_hessian_vec(z, d, &mut h);
        }
        h
    }
}

fn asymmetric(f: &Factorization, obs: &ObservationSet, w: &WeightMatrix, params: Option<&RegularizerParams>) -> Result<AsymmetricObjective> {
    if f.u.nrows() != obs.n1() || f.v.nrows() != obs.n2() {
        return Err(Error::arg("factor shapes disagree with the observation grid"));
    }
    Ok(AsymmetricObjective::new(WeightedEntries::new(obs, w)?, f.rank(), params.copied()))
}

/// Asymmetric objective value at (U, V).
pub fn objective(f: &Factorization, obs: &ObservationSet, w: &WeightMatrix, params: Option<&RegularizerParams>) -> Result<f64> {
    let obj = asymmetric(f, obs, w, params)?;
    Ok(obj.value(&f.stacked()))
}

/// (∇_U f, ∇_V f) of the asymmetric objective.
pub fn gradient(
    f: &Factorization,
    obs: &ObservationSet,
    w: &WeightMatrix,
    params: Option<&RegularizerParams>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let obj = asymmetric(f, obs, w, params)?;
    let g = Factorization::from_stacked(&obj.gradient(&f.stacked()), obs.n1());
    Ok((g.u, g.v))
}

/// Second directional derivative of the asymmetric objective along (Δ_U, Δ_V).
pub fn hessian_quadratic_form(
    f: &Factorization,
    dir: &Factorization,
    obs: &ObservationSet,
    w: &WeightMatrix,
    params: Option<&RegularizerParams>,
) -> Result<f64> {
    if dir.u.shape() != f.u.shape() || dir.v.shape() != f.v.shape() {
        return Err(Error::arg("direction shape differs from the factorization"));
    }
    let obj = asymmetric(f, obs, w, params)?;
    Ok(obj.hessian_form(&f.stacked(), &dir.stacked()))
}
