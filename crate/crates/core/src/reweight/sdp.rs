use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::{Backend, ReweightConfig};
use super::exact::ExactOracle;
use super::fast::FastOracle;
use super::problem::BarrierProblem;
use crate::error::{Error, Result};

/// A packing iterate x evaluated at inverse temperature η, with Ψ = Σ x_i M_i.
pub struct OracleEval {
    pub lambda_max: f64,
    /// ln tr exp(η(Ψ − λ_max I))
    pub log_partition: f64,
    /// M_i • P for P = exp(η(Ψ − λ_max I)) / tr(·)
    pub densities: Vec<f64>,
}

impl OracleEval {
    /// (1/η)·ln tr exp(ηΨ), an upper bound on λ_max within ln(d)/η.
    pub fn soft_max(&self, eta: f64) -> f64 {
        self.lambda_max + self.log_partition / eta
    }
}

/// Access to the rank-one atoms M_i = v_i v_iᵀ of a packing SDP.
pub trait PackingOracle {
    fn len(&self) -> usize;
    fn eval(&self, x: &[f64], eta: f64) -> Result<OracleEval>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    /// One increment per edge, zero on edges with c⁺ ≤ c⁻.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Dual certificate: no feasible x exceeds this objective.
    pub upper_bound: f64,
    pub target: f64,
    pub iterations: usize,
    pub restarts: usize,
}

impl SdpSolution {
    pub fn meets_target(&self) -> bool {
        self.objective >= self.target
    }
}

pub(crate) struct MwuOptions {
    pub accuracy: f64,
    pub iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximize cᵀx subject to Σ x_i M_i ⪯ cap·I, x ≥ 0, for c > 0 on every atom.
///
/// Entropic mirror descent on y = c∘x over the simplex, minimizing the soft maximum
/// (1/η)·ln tr exp(ηΨ) of Ψ = Σ x_i M_i. The gradient coordinates are (M_i • P)/c_i with P
/// the normalized matrix exponential, which also yields the dual bound
/// cap·max_i c_i/(M_i • P). Iterates are rescaled onto the cap by their true λ_max.
pub(crate) fn mwu(oracle: &dyn PackingOracle, c: &[f64], traces: &[f64], cap: f64, target: f64, opts: &MwuOptions) -> Result<(Vec<f64>, f64, f64, usize, usize)> {
    let m = oracle.len();
    let sharpness = (m.max(2) as f64).ln().max(1.0) / opts.accuracy;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let noise = Normal::new(0.0, 0.5).expect("valid sigma");
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut upper = f64::INFINITY;
    let mut total = 0;
    let mut restarts = 0;
    let normalize = |x: &mut Vec<f64>| {
        let s = dot(c, x);
        x.iter_mut().for_each(|v| *v /= s);
    };

    for attempt in 0..=opts.restarts {
        restarts = attempt;
        let mut x: Vec<f64> = (0..m).map(|i| c[i] / (traces[i] * traces[i])).collect();
        if attempt > 0 {
            x.iter_mut().for_each(|v| *v *= f64::exp(noise.sample(&mut rng)));
        }
        normalize(&mut x);
        let first = oracle.eval(&x, 0.0)?;
        // η fixed per attempt so the smoothed objective is a single convex function
        let eta = sharpness / first.lambda_max;
        let mut cur = oracle.eval(&x, eta)?;
        let mut f = cur.soft_max(eta);
        let mut tau = 1.0;
        for t in 0..opts.iters {
            total += 1;
            let obj = cap / cur.lambda_max;
            let ub = cap * (0..m).map(|i| c[i] / cur.densities[i]).fold(0.0, f64::max);
            upper = upper.min(ub);
            if best.as_ref().is_none_or(|b| obj > b.1) {
                best = Some((x.iter().map(|v| v * cap / cur.lambda_max).collect(), obj));
            }
            if (obj >= target && t >= 2) || obj >= (1.0 - opts.accuracy) * upper {
                break;
            }
            // gradient in y-coordinates, made scale free by its y-average
            let g: Vec<f64> = (0..m).map(|i| cur.densities[i] / c[i]).collect();
            let gbar: f64 = (0..m).map(|i| c[i] * x[i] * g[i]).sum();
            let mut accepted = false;
            for _ in 0..20 {
                let mut y: Vec<f64> = (0..m).map(|i| x[i] * (-tau * (g[i] / gbar - 1.0)).exp()).collect();
                normalize(&mut y);
                let ey = oracle.eval(&y, eta)?;
                let fy = ey.soft_max(eta);
                if fy < f {
                    x = y;
                    cur = ey;
                    f = fy;
                    tau *= 1.5;
                    accepted = true;
                    break;
                }
                tau *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let b = best.as_ref().map_or(0.0, |b| b.1);
        debug!("packing attempt {attempt}: objective {b:e}, bound {upper:e}, target {target:e}");
        if b >= target {
            break;
        }
    }
    let (x, obj) = best.unwrap_or((vec![0.0; m], 0.0));
    Ok((x, obj, upper, total, restarts))
}

/// Approximate maximizer of (C₊ − C₋) • X over X = Σ x_e v_e v_eᵀ ⪯ cap·I.
///
/// `target` is the required objective; falling short after all restarts is a solver error
/// that carries the best objective reached.
pub fn solve_packing_sdp(
    problem: &BarrierProblem,
    c_plus: &[f64],
    c_minus: &[f64],
    cap: f64,
    target: f64,
    cfg: &ReweightConfig,
) -> Result<SdpSolution> {
    let m = problem.edges().len();
    if c_plus.len() != m || c_minus.len() != m {
        return Err(Error::arg("score vectors must have one entry per edge"));
    }
    if !(cap > 0.0) || !cap.is_finite() {
        return Err(Error::arg(format!("packing cap {cap} must be positive")));
    }
    if c_plus.iter().chain(c_minus).any(|v| !v.is_finite()) {
        return Err(Error::arg("scores must be finite"));
    }
    let active: Vec<usize> = (0..m).filter(|&e| c_plus[e] > c_minus[e]).collect();
    let mut x = vec![0.0; m];
    if active.is_empty() {
        let sol = SdpSolution { x, objective: 0.0, upper_bound: 0.0, target, iterations: 0, restarts: 0 };
        return if sol.meets_target() { Ok(sol) } else { Err(Error::solver("no edge has positive score", 0.0)) };
    }
    let c: Vec<f64> = active.iter().map(|&e| c_plus[e] - c_minus[e]).collect();
    let all_traces = problem.atom_traces();
    let traces: Vec<f64> = active.iter().map(|&e| all_traces[e]).collect();
    let opts = MwuOptions {
        accuracy: cfg.eps,
        iters: cfg.sdp_iters,
        restarts: (problem.n_vertices() as f64).log2().ceil() as usize,
        seed: cfg.seed,
    };
    let oracle: Box<dyn PackingOracle + '_> = match cfg.backend {
        Backend::Exact => Box::new(ExactOracle::new(problem, &active)),
        Backend::Fast => Box::new(FastOracle::new(problem, &active, cfg)?),
    };
    let (xa, objective, upper_bound, iterations, restarts) = mwu(oracle.as_ref(), &c, &traces, cap, target, &opts)?;
    for (k, &e) in active.iter().enumerate() {
        x[e] = xa[k];
    }
    let sol = SdpSolution { x, objective, upper_bound, target, iterations, restarts };
    if !sol.meets_target() {
        return Err(Error::solver(
            format!("packing objective below target {target:e} (dual bound {upper_bound:e})"),
            objective,
        ));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::EdgeList;

    #[test]
    fn single_edge_fills_the_cap() {
        let p = BarrierProblem::new(EdgeList::complete(1, 1).unwrap()).unwrap();
        let cfg = ReweightConfig::new(0.1, 0.1).unwrap();
        let s = solve_packing_sdp(&p, &[2.0], &[1.0], 0.1, 0.05, &cfg).unwrap();
        assert!((s.x[0] - 0.1).abs() < 1e-12);
        assert!((s.objective - 0.1).abs() < 1e-12);
        assert!(s.upper_bound >= s.objective - 1e-12);
    }

    #[test]
    fn inactive_edges_get_zero() {
        let p = BarrierProblem::new(EdgeList::complete(2, 2).unwrap()).unwrap();
        let cfg = ReweightConfig::new(0.1, 0.1).unwrap();
        let s = solve_packing_sdp(&p, &[1.0; 4], &[1.0; 4], 0.1, -1.0, &cfg).unwrap();
        assert_eq!(s.x, vec![0.0; 4]);
        let err = solve_packing_sdp(&p, &[1.0; 4], &[1.0; 4], 0.1, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Solver { .. }));
    }

    #[test]
    fn result_is_feasible_and_near_bound() {
        let edges = EdgeList::new(3, 3, vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 2)]).unwrap();
        let p = BarrierProblem::new(edges).unwrap();
        let cfg = ReweightConfig::new(0.1, 0.05).unwrap();
        let cp = [3.0, 2.0, 4.0, 1.5, 2.5, 3.5];
        let cm = [1.0; 6];
        let cap = 0.2;
        let s = solve_packing_sdp(&p, &cp, &cm, cap, 0.0, &cfg).unwrap();
        let top = nalgebra::SymmetricEigen::new(p.operator(&s.x)).eigenvalues.max();
        assert!(top <= cap * (1.0 + 1e-9));
        let obj: f64 = (0..6).map(|e| (cp[e] - cm[e]) * s.x[e]).sum();
        assert!((obj - s.objective).abs() < 1e-9 * obj);
        assert!(s.objective <= s.upper_bound * (1.0 + 1e-9));
    }

}
