//! Fast backend. Matrix functions of A = L_G^{+/2} L̂ L_G^{+/2} are evaluated through the
//! similar operator T = L_G⁺L̂ on vertex space: f(A) = L_G^{1/2} f(T) L_G^{+/2} on the range,
//! so every quantity reduces to Horner steps of T (one L̂ product and one Laplacian solve per
//! column) followed by quadratic forms in L_G.

use std::cell::OnceCell;

use nalgebra::DMatrix;

use super::config::ReweightConfig;
use super::driver::Snapshot;
use super::problem::BarrierProblem;
use super::sdp::{OracleEval, PackingOracle};
use crate::error::{Error, Result};
use crate::spectral::{
    build_laplacian, build_poly_exp_half_inv, build_poly_exp_inv_half, build_poly_inv_square, exp_taylor,
    solve_pseudo, Affine, EdgeList, Laplacian, MatrixPolynomial, SketchConfig,
};

const SOLVE_TOL: f64 = 1e-12;
/// Pointwise relative accuracy of the polynomial used for the potential.
const POTENTIAL_ACCURACY: f64 = 1e-11;
/// Absolute accuracy of the Taylor exponential inside the packing oracle.
const EXP_ACCURACY: f64 = 1e-9;

/// L_G⁺ and L̂ acting on blocks of vertex vectors.
struct VertexOps<'a> {
    lg: &'a Laplacian,
    lhat: Laplacian,
}

impl<'a> VertexOps<'a> {
    fn new(lg: &'a Laplacian, edges: &EdgeList, w: &[f64]) -> Result<Self> {
        Ok(Self { lg, lhat: build_laplacian(edges, w)? })
    }

    fn n(&self) -> usize {
        self.lg.dim()
    }

    fn pinv(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, b.ncols());
        for (src, dst) in b.as_slice().chunks(n).zip(out.as_mut_slice().chunks_mut(n)) {
            let (x, _) = solve_pseudo(self.lg, src, SOLVE_TOL)?;
            dst.copy_from_slice(&x);
        }
        Ok(out)
    }

    fn lhat(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, x.ncols());
        for (src, dst) in x.as_slice().chunks(n).zip(out.as_mut_slice().chunks_mut(n)) {
            self.lhat.apply(src, dst);
        }
        out
    }

    /// T X = L_G⁺ L̂ X
    fn t(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.pinv(&self.lhat(x))
    }

    /// Tᵀ X = L̂ L_G⁺ X
    fn t_adj(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.lhat(&self.pinv(x)?))
    }
}

/// I − 11ᵀ/n, the projector onto range(L_G).
fn centering(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |a, b| if a == b { 1.0 } else { 0.0 } - 1.0 / n as f64)
}

/// ln tr(P^{2^s}), squaring with rescaling. P must have nonnegative real spectrum.
fn log_trace_power(p: &DMatrix<f64>, squarings: u32) -> Result<f64> {
    let scale = p.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Internal("trace power of a zero or non-finite matrix".into()));
    }
    let mut m = p / scale;
    let mut log = scale.ln();
    for _ in 0..squarings {
        m = &m * &m;
        let f = m.amax();
        if !(f > 0.0) {
            return Err(Error::Internal("trace power collapsed to zero".into()));
        }
        m /= f;
        log = 2.0 * log + f.ln();
    }
    let tr = m.trace();
    if !(tr > 0.0) {
        return Err(Error::Internal(format!("trace power produced trace {tr}")));
    }
    Ok(log + tr.ln())
}

/// Smallest s with d^{1/2^s} ≤ e^{slack}.
fn squarings_for(d: usize, slack: f64) -> u32 {
    let need = (d.max(2) as f64).ln() / slack;
    need.log2().ceil().max(1.0) as u32
}

/// c_e = K_aa + K_bb − 2K_ab for every edge e = (a, b).
fn edge_forms(k: &DMatrix<f64>, edges: &EdgeList) -> Vec<f64> {
    (0..edges.len())
        .map(|e| {
            let (a, b) = edges.endpoints(e);
            (k[(a, a)] + k[(b, b)] - 2.0 * k[(a, b)]).max(0.0)
        })
        .collect()
}

/// c_e = ‖Y_a − Y_b‖² over the rows of Y.
fn row_distances(y: &DMatrix<f64>, edges: &EdgeList) -> Vec<f64> {
    (0..edges.len())
        .map(|e| {
            let (a, b) = edges.endpoints(e);
            (y.row(a) - y.row(b)).norm_squared()
        })
        .collect()
}

/// Σ_s y_sᵀ L y_s over the columns of Y.
fn block_quad(l: &Laplacian, y: &DMatrix<f64>) -> f64 {
    let n = l.dim();
    y.as_slice().chunks(n).map(|c| l.quad_form(c)).sum()
}

/// Bᵀ Sᵀ for the complete bipartite graph, with S a k × n1n2 Gaussian sketch.
fn sketched_incidence(n1: usize, n2: usize, cfg: &SketchConfig) -> Result<DMatrix<f64>> {
    let s = cfg.matrix(n1 * n2)?;
    let mut z = DMatrix::zeros(n1 + n2, cfg.k);
    for r in 0..cfg.k {
        for i in 0..n1 {
            for j in 0..n2 {
                let v = s[(r, i * n2 + j)];
                z[(i, r)] += v;
                z[(n1 + j, r)] -= v;
            }
        }
    }
    Ok(z)
}

pub(crate) struct FastSnapshot<'a> {
    problem: &'a BarrierProblem,
    ops: VertexOps<'a>,
    u: f64,
    l: f64,
    eps: f64,
    /// lower bound on both barrier gaps
    gap: f64,
    sketch: Option<SketchConfig>,
    pinv: OnceCell<DMatrix<f64>>,
}

impl<'a> FastSnapshot<'a> {
    pub fn new(problem: &'a BarrierProblem, w: &[f64], u: f64, l: f64, cfg: &ReweightConfig) -> Result<Self> {
        if !(u > l) {
            return Err(Error::State(format!("barriers out of order: l = {l}, u = {u}")));
        }
        let ops = VertexOps::new(problem.lg(), problem.edges(), w)?;
        let n = problem.n_vertices();
        let sk = SketchConfig::with_constant(n, cfg.sketch_eps(), cfg.seed, cfg.c_jl)?;
        let sketch = (sk.k < n).then_some(sk);
        // Φ never exceeds its initial value 2(n−1)e⁴, and exp(1/gap) ≤ Φ
        let gap = initial_gap(problem.dim());
        Ok(Self { problem, ops, u, l, eps: cfg.eps, gap, sketch, pinv: OnceCell::new() })
    }

    fn n(&self) -> usize {
        self.ops.n()
    }

    fn pinv_dense(&self) -> Result<&DMatrix<f64>> {
        if let Some(p) = self.pinv.get() {
            return Ok(p);
        }
        let p = self.ops.pinv(&DMatrix::identity(self.n(), self.n()))?;
        Ok(self.pinv.get_or_init(|| p))
    }

    fn barriers(&self) -> [Affine; 2] {
        [Affine::lower_gap(self.l), Affine::upper_gap(self.u)]
    }

    /// p(T)Π
    fn vertex_fn(&self, p: &MatrixPolynomial, inner: Affine) -> Result<DMatrix<f64>> {
        p.apply_block(inner, |x| self.ops.t(x), &centering(self.n()))
    }

    fn check_margin(&self) -> Result<()> {
        if self.gap >= 1.0 {
            return Err(Error::State("gap bound out of range".into()));
        }
        Ok(())
    }
}

/// 1/ln(2(n−1)e⁴) for n − 1 = d.
pub(crate) fn initial_gap(d: usize) -> f64 {
    1.0 / ((2.0 * d as f64).ln() + 4.0)
}

impl Snapshot for FastSnapshot<'_> {
    /// (1 − ε_p)·tr(p(A_u)^{2k} + p(A_ℓ)^{2k})^{−1/2k} with p ≈ x⁻², which lies in
    /// [1 − ε, 1]·ρ.
    fn rho(&self) -> Result<f64> {
        self.check_margin()?;
        let ep = self.eps / 5.0;
        let p = build_poly_inv_square(self.gap, ep)?;
        let d = 2 * self.problem.dim();
        let s = squarings_for(d, self.eps / 4.0);
        let mut logs = Vec::with_capacity(2);
        match &self.sketch {
            None => {
                for inner in self.barriers() {
                    logs.push(log_trace_power(&self.vertex_fn(&p, inner)?, s)?);
                }
            }
            Some(sk) => {
                // Hutchinson estimate of tr(p(A)^{2k}) = E Σ‖B p(T)^k L⁺ Bᵀ s‖²
                let z = sketched_incidence(self.problem.edges().n1(), self.problem.edges().n2(), sk)?;
                let k = 1usize << (s - 1);
                for inner in self.barriers() {
                    let mut y = self.ops.pinv(&z)?;
                    for _ in 0..k {
                        y = p.apply_block(inner, |x| self.ops.t(x), &y)?;
                        // keep the block in range and at unit scale
                        let f = y.amax();
                        if !(f > 0.0) {
                            return Err(Error::Internal("sketched power collapsed".into()));
                        }
                        y /= f;
                        logs.push(2.0 * f.ln());
                    }
                    let q = block_quad(self.ops.lg, &y) * (1.0 + sk.eps_jl);
                    logs.push(q.ln());
                }
                // collapse per-barrier sums: logs holds k scale terms and one trace per barrier
                let per = k + 1;
                let folded: Vec<f64> = logs.chunks(per).map(|c| c.iter().sum()).collect();
                logs = folded;
            }
        }
        let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = hi + logs.iter().map(|v| (v - hi).exp()).sum::<f64>().ln();
        Ok((1.0 - ep) * (-log_sum / (1u64 << s) as f64).exp())
    }

    fn scores(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_margin()?;
        let p = build_poly_exp_half_inv(self.gap, self.eps / 5.0)?;
        let edges = self.problem.edges();
        let mut out = Vec::with_capacity(2);
        match &self.sketch {
            None => {
                let lg = self.ops.lg.to_dense();
                let pinv = self.pinv_dense()?;
                for inner in self.barriers() {
                    let g = self.vertex_fn(&p, inner)? * pinv;
                    let k = g.transpose() * (&lg * &g);
                    out.push(edge_forms(&k, edges));
                }
            }
            Some(sk) => {
                let z = sketched_incidence(edges.n1(), edges.n2(), sk)?;
                for inner in self.barriers() {
                    let y = self.ops.pinv(&p.apply_block(inner, |x| self.ops.t_adj(x), &z)?)?;
                    out.push(row_distances(&y, edges));
                }
            }
        }
        let cm = out.pop().unwrap();
        let cp = out.pop().unwrap();
        Ok((cp, cm))
    }

    fn traces(&self) -> Result<(f64, f64)> {
        self.check_margin()?;
        let p = build_poly_exp_half_inv(self.gap, self.eps / 5.0)?;
        let mut out = Vec::with_capacity(2);
        for inner in self.barriers() {
            out.push(match &self.sketch {
                None => {
                    let f = self.vertex_fn(&p, inner)?;
                    (&f * &f).trace()
                }
                Some(sk) => {
                    let z = sketched_incidence(self.problem.edges().n1(), self.problem.edges().n2(), sk)?;
                    let y = p.apply_block(inner, |x| self.ops.t(x), &self.ops.pinv(&z)?)?;
                    block_quad(self.ops.lg, &y)
                }
            });
        }
        Ok((out[0], out[1]))
    }

    /// tr exp((uI − A)⁻¹) + tr exp((A − ℓI)⁻¹) as squared Frobenius norms of
    /// exp(1/(2x)) polynomials. Always on vertex space: the step test needs accuracy well
    /// below the acceptance slack.
    fn potential(&self) -> Result<f64> {
        self.check_margin()?;
        let p = build_poly_exp_inv_half(self.gap, POTENTIAL_ACCURACY)?;
        let mut phi = 0.0;
        for inner in self.barriers() {
            let e = self.vertex_fn(&p, inner)?;
            phi += (&e * &e).trace();
        }
        let bound = 2.0 * self.problem.dim() as f64 * 4f64.exp() * (1.0 + 1e-6);
        if !(phi <= bound) {
            return Err(Error::State(format!("potential {phi:e} exceeds its initial value {bound:e}")));
        }
        Ok(phi)
    }
}

/// Packing oracle on vertex space: Ψ(x) = Σ x_i v_i v_iᵀ is similar to T_x = L_G⁺L_x, which is
/// formed densely with one Laplacian solve per vertex.
pub(crate) struct FastOracle<'a> {
    problem: &'a BarrierProblem,
    active: Vec<usize>,
    squarings: u32,
    pinv: DMatrix<f64>,
    lg: DMatrix<f64>,
}

impl<'a> FastOracle<'a> {
    pub fn new(problem: &'a BarrierProblem, active: &[usize], cfg: &ReweightConfig) -> Result<Self> {
        let n = problem.n_vertices();
        let ops = VertexOps::new(problem.lg(), problem.edges(), &vec![0.0; problem.edges().len()])?;
        let pinv = ops.pinv(&DMatrix::identity(n, n))?;
        Ok(Self {
            problem,
            active: active.to_vec(),
            squarings: squarings_for(problem.dim(), cfg.eps / 20.0),
            pinv,
            lg: problem.lg().to_dense(),
        })
    }

    fn operator(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let edges = self.problem.edges();
        let pairs: Vec<_> = self
            .active
            .iter()
            .zip(x)
            .map(|(&e, &xe)| {
                let (a, b) = edges.endpoints(e);
                (a, b, xe)
            })
            .collect();
        let lx = Laplacian::from_weighted_pairs(self.problem.n_vertices(), &pairs)?;
        // T_x Π = L⁺ L_x (L_x Π = L_x)
        Ok(&self.pinv * lx.to_dense())
    }
}

impl PackingOracle for FastOracle<'_> {
    fn len(&self) -> usize {
        self.active.len()
    }

    /// λ_max is replaced by the trace-power upper bound λ̂ ≥ λ_max, and the normalized
    /// Gibbs densities use exp(η(Ψ − λ̂)) from a Taylor polynomial.
    fn eval(&self, x: &[f64], eta: f64) -> Result<OracleEval> {
        let t = self.operator(x)?;
        let top = (log_trace_power(&t, self.squarings)? / (1u64 << self.squarings) as f64).exp();
        let lo = -eta * top / 2.0;
        let p = exp_taylor(lo, 0.0, EXP_ACCURACY)?;
        // y = η(a − λ̂)/2
        let inner = Affine { shift: lo, scale: eta / 2.0 };
        let n = self.problem.n_vertices();
        let e = p.apply_block(inner, |m| Ok(&t * m), &centering(n))?;
        let z = (&e * &e).trace();
        if !(z > 0.0) {
            return Err(Error::Internal("packing oracle partition function vanished".into()));
        }
        let g = &e * &self.pinv;
        let k = g.transpose() * (&self.lg * &g) / z;
        let edges = self.problem.edges();
        let densities = self
            .active
            .iter()
            .map(|&i| {
                let (a, b) = edges.endpoints(i);
                (k[(a, a)] + k[(b, b)] - 2.0 * k[(a, b)]).max(0.0)
            })
            .collect();
        Ok(OracleEval { lambda_max: top, log_partition: z.ln(), densities })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_power_of_diagonal() {
        let p = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 0.5]));
        let s = 4;
        let expect = (3f64.powi(16) + 1.0 + 0.5f64.powi(16)).ln();
        assert!((log_trace_power(&p, s).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn squarings_reach_slack() {
        let s = squarings_for(100, 0.01);
        assert!((100f64).ln() / (1u64 << s) as f64 <= 0.01);
        assert!((100f64).ln() / (1u64 << (s - 1)) as f64 > 0.01);
    }

    #[test]
    fn sketched_incidence_columns_sum_to_zero() {
        let cfg = SketchConfig { k: 3, seed: 1, eps_jl: 0.5, c_jl: 1.0 };
        let z = sketched_incidence(2, 3, &cfg).unwrap();
        for c in 0..3 {
            assert!(z.column(c).sum().abs() < 1e-12);
        }
    }
}

#[cfg(test)]
mod backend_tests {
    use super::*;
    use crate::reweight::driver::{advance, BarrierState};
    use crate::reweight::exact::ExactSnapshot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(n1: usize, n2: usize, seed: u64) -> BarrierProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = Vec::new();
        for i in 0..n1 {
            for j in 0..n2 {
                if i == 0 || j == 0 || rng.random::<f64>() < 0.6 {
                    e.push((i, j));
                }
            }
        }
        BarrierProblem::new(EdgeList::new(n1, n2, e).unwrap()).unwrap()
    }

    fn advanced(p: &BarrierProblem, cfg: &ReweightConfig, steps: usize) -> BarrierState {
        let mut s = BarrierState::initial(p, cfg).unwrap();
        for _ in 0..steps {
            s = advance(p, &s, cfg).unwrap().0;
        }
        s
    }

    #[test]
    fn vertex_path_matches_exact() {
        let p = instance(5, 6, 1);
        let cfg = ReweightConfig::new(0.1, 0.1).unwrap().with_backend(crate::reweight::Backend::Fast);
        let s = advanced(&p, &ReweightConfig::new(0.1, 0.1).unwrap(), 10);
        let ex = ExactSnapshot::new(&p, &s.weights, s.u, s.l).unwrap();
        let fs = FastSnapshot::new(&p, &s.weights, s.u, s.l, &cfg).unwrap();
        assert!(fs.sketch.is_none());
        let r = fs.rho().unwrap() / ex.rho();
        assert!((0.9..=1.0).contains(&r), "rho ratio {r}");
        let ((ep, em), (fp, fm)) = (ex.scores(), fs.scores().unwrap());
        for e in 0..ep.len() {
            assert!((fp[e] / ep[e] - 1.0).abs() <= 0.05);
            assert!((fm[e] / em[e] - 1.0).abs() <= 0.05);
        }
        let ((tp, tm), (gp, gm)) = (ex.traces(), fs.traces().unwrap());
        assert!((gp / tp - 1.0).abs() < 0.05 && (gm / tm - 1.0).abs() < 0.05);
        assert!((fs.potential().unwrap() / ex.potential() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sketched_path_is_close() {
        let p = instance(10, 10, 2);
        let mut cfg = ReweightConfig::new(0.1, 0.1).unwrap().with_backend(crate::reweight::Backend::Fast);
        cfg.jl_eps = Some(0.5);
        cfg.c_jl = 1.0;
        let s = advanced(&p, &ReweightConfig::new(0.1, 0.1).unwrap(), 5);
        let ex = ExactSnapshot::new(&p, &s.weights, s.u, s.l).unwrap();
        let fs = FastSnapshot::new(&p, &s.weights, s.u, s.l, &cfg).unwrap();
        assert!(fs.sketch.is_some());
        let r = fs.rho().unwrap() / ex.rho();
        assert!((0.85..=1.02).contains(&r), "rho ratio {r}");
        let ((ep, _), (fp, _)) = (ex.scores(), fs.scores().unwrap());
        let mut ratios: Vec<f64> = ep.iter().zip(&fp).map(|(a, b)| b / a).collect();
        ratios.sort_by(f64::total_cmp);
        let median = ratios[ratios.len() / 2];
        assert!((median - 1.0).abs() < 0.25, "median ratio {median}");
        let ((tp, _), (gp, _)) = (ex.traces(), fs.traces().unwrap());
        assert!((gp / tp - 1.0).abs() < 0.5);
    }

    #[test]
    fn oracle_matches_exact() {
        use crate::reweight::exact::ExactOracle;
        let p = instance(4, 5, 3);
        let active: Vec<usize> = (0..p.edges().len()).step_by(2).collect();
        let cfg = ReweightConfig::new(0.1, 0.1).unwrap();
        let fo = FastOracle::new(&p, &active, &cfg).unwrap();
        let eo = ExactOracle::new(&p, &active);
        let x: Vec<f64> = (0..active.len()).map(|i| 0.5 + 0.1 * i as f64).collect();
        let (f, e) = (fo.eval(&x, 20.0).unwrap(), eo.eval(&x, 20.0).unwrap());
        assert!(f.lambda_max >= e.lambda_max * (1.0 - 1e-12));
        assert!(f.lambda_max <= e.lambda_max * (1.0 + cfg.eps / 20.0));
        // densities are normalized against different shifts; compare soft maxima and shapes
        assert!((f.soft_max(20.0) - e.soft_max(20.0)).abs() < 1e-6 * e.soft_max(20.0));
        for (a, b) in f.densities.iter().zip(&e.densities) {
            assert!((a - b).abs() < 1e-6 * e.densities.iter().cloned().fold(0.0, f64::max));
        }
    }
}
